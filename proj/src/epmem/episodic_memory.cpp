// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/epmem/episodic_memory.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mra/common/errors.hpp"
#include "mra/simd/kernels.hpp"

namespace mra::epmem {

using diffcore::Shape;
using diffcore::shape_str;

MemoryConfig default_memory_config(bool grid_family) {
  MemoryConfig cfg;
  cfg.capacity = grid_family ? 2048 : 1024;
  return cfg;
}

template <typename T>
EpisodicBuffer<T>::EpisodicBuffer(std::size_t capacity, std::size_t embed, std::size_t hidden)
    : capacity_(capacity), embed_(embed), hidden_(hidden) {
  if (capacity == 0) throw ContractError("EpisodicBuffer: capacity must be positive");
}

template <typename T>
std::size_t EpisodicBuffer<T>::store(MemorySlot<T> slot) {
  if (capacity_ == 0) throw ContractError("EpisodicBuffer: store into an unsized buffer");
  if (slot.p.size() != embed_ || slot.v.size() != hidden_) {
    throw DimensionError("EpisodicBuffer: slot widths " + shape_str(slot.p.shape()) + ", " +
                         shape_str(slot.v.shape()) + " do not match embed " + std::to_string(embed_) +
                         ", hidden " + std::to_string(hidden_));
  }
  const std::size_t index = next_;
  if (index == slots_.size()) {
    slots_.push_back(std::move(slot));
  } else {
    slots_[index] = std::move(slot);
  }
  next_ = (next_ + 1) % capacity_;
  count_ = std::min(count_ + 1, capacity_);
  return index;
}

template <typename T>
void EpisodicBuffer<T>::reset() {
  slots_.clear();
  next_ = 0;
  count_ = 0;
}

template <typename T>
EpisodicBuffer<T> EpisodicBuffer<T>::detached() const {
  EpisodicBuffer out = *this;
  for (auto& s : out.slots_) {
    s.live_p.reset();
    s.live_v.reset();
  }
  return out;
}

template <typename T>
WriteResult<T> write(EpisodicBuffer<T>& buffer, Var<T> x, Var<T> h, Var<T> key_w, Var<T> key_b,
                     std::int64_t step, WriteMode mode) {
  if (x.size() != buffer.embed_size() || h.size() != buffer.hidden_size()) {
    throw DimensionError("epmem::write: got x " + shape_str(x.shape()) + ", h " + shape_str(h.shape()) +
                         " for embed " + std::to_string(buffer.embed_size()) + ", hidden " +
                         std::to_string(buffer.hidden_size()));
  }
  Var<T> key = diffcore::affine(key_w, diffcore::concat({diffcore::stop_gradient(x), diffcore::stop_gradient(h)}),
                                key_b);
  MemorySlot<T> slot;
  slot.p = x.value();
  slot.v = h.value();
  slot.k = key.value();
  slot.write_step = step;
  if (mode == WriteMode::kLinked) {
    slot.live_p = x;
    slot.live_v = h;
  }
  const std::size_t index = buffer.store(std::move(slot));
  return {index, key};
}

template <typename T>
Var<T> query(Var<T> x, Var<T> h_prev, Var<T> query_w, Var<T> query_b) {
  return diffcore::affine(query_w, diffcore::concat({x, h_prev}), query_b);
}

template <typename T>
std::vector<std::size_t> select_neighbors(const EpisodicBuffer<T>& buffer, std::span<const T> q, std::size_t k) {
  const std::size_t n = buffer.count();
  std::vector<std::pair<T, std::size_t>> scored;
  scored.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& key = buffer.slot(i).k;
    if (key.size() != q.size()) {
      throw DimensionError("epmem::read: query width " + std::to_string(q.size()) + " vs cached key " +
                           shape_str(key.shape()));
    }
    scored.emplace_back(simd::sq_dist(q.data(), key.data(), q.size()), i);
  }
  const std::size_t take = std::min(k, n);
  auto less = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return buffer.slot(a.second).write_step < buffer.slot(b.second).write_step;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), less);
  std::vector<std::size_t> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = scored[i].second;
  return out;
}

template <typename T>
ReadResult<T> read(const EpisodicBuffer<T>& buffer, Var<T> q, std::size_t k, Var<T> key_w, Var<T> key_b,
                   T epsilon) {
  if (!(epsilon > T(0))) throw ContractError("epmem::read: epsilon must be positive");
  if (k == 0) throw ContractError("epmem::read: K must be at least 1");
  diffcore::Tape<T>& tape = *q.tape;
  ReadResult<T> out;
  if (buffer.count() == 0) {
    out.m = tape.constant(Tensor<T>(Shape{buffer.hidden_size()}));
    return out;
  }
  out.neighbors = select_neighbors(buffer, q.value().values(), k);
  const std::size_t n = out.neighbors.size();

  std::vector<Var<T>> inv;
  std::vector<Var<T>> values;
  inv.reserve(n);
  values.reserve(n);
  for (std::size_t idx : out.neighbors) {
    const MemorySlot<T>& s = buffer.slot(idx);
    const bool live = s.live_p && s.live_p->tape == &tape;
    Var<T> p = live ? *s.live_p : tape.constant(s.p);
    Var<T> v = live ? *s.live_v : tape.constant(s.v);
    Var<T> fresh = diffcore::affine(key_w, diffcore::concat({p, v}), key_b);
    inv.push_back(diffcore::reciprocal(diffcore::add_scalar(diffcore::sq_distance(q, fresh), epsilon)));
    values.push_back(v);
  }
  Var<T> w = diffcore::concat(std::span<const Var<T>>(inv));
  Var<T> wn = diffcore::mul(w, diffcore::reciprocal(diffcore::sum(w)));
  Var<T> vm = diffcore::reshape(diffcore::concat(std::span<const Var<T>>(values)), Shape{n, buffer.hidden_size()});
  out.m = diffcore::matvec_t(vm, wn);
  out.weights.assign(wn.value().storage().begin(), wn.value().storage().end());
  return out;
}

template <typename T>
void init_memory_params(ParameterSet<T>& params, std::size_t embed, std::size_t hidden, std::size_t key_size,
                        diffcore::Rng& rng) {
  const std::size_t in = embed + hidden;
  params.add("mem/key_w", diffcore::uniform_fan_in<T>(Shape{key_size, in}, in, rng));
  params.add("mem/key_b", Tensor<T>(Shape{key_size}));
  params.add("mem/query_w", diffcore::uniform_fan_in<T>(Shape{key_size, in}, in, rng));
  params.add("mem/query_b", Tensor<T>(Shape{key_size}));
}

void MemoryTrace::record(std::int64_t step, std::size_t write_index, const std::vector<std::size_t>& neighbors,
                         const std::vector<double>& weights) {
  rows_.push_back({step, write_index, neighbors, weights});
}

std::string MemoryTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "step,write_index,neighbor_indices,weights\n";
  for (const auto& r : rows_) {
    os << r.step << ',' << r.write_index << ',';
    for (std::size_t i = 0; i < r.neighbors.size(); ++i) os << (i ? ";" : "") << r.neighbors[i];
    os << ',';
    for (std::size_t i = 0; i < r.weights.size(); ++i) os << (i ? ";" : "") << r.weights[i];
    os << '\n';
  }
  return os.str();
}

void MemoryTrace::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("MemoryTrace: cannot open " + path.string());
  f << to_csv();
}

#define MRA_EPMEM_INSTANTIATE(T)                                                                                 \
  template class EpisodicBuffer<T>;                                                                            \
  template WriteResult<T> write<T>(EpisodicBuffer<T>&, Var<T>, Var<T>, Var<T>, Var<T>, std::int64_t, WriteMode); \
  template Var<T> query<T>(Var<T>, Var<T>, Var<T>, Var<T>);                                                    \
  template ReadResult<T> read<T>(const EpisodicBuffer<T>&, Var<T>, std::size_t, Var<T>, Var<T>, T);            \
  template std::vector<std::size_t> select_neighbors<T>(const EpisodicBuffer<T>&, std::span<const T>, std::size_t); \
  template void init_memory_params<T>(ParameterSet<T>&, std::size_t, std::size_t, std::size_t, diffcore::Rng&);

MRA_EPMEM_INSTANTIATE(float)
MRA_EPMEM_INSTANTIATE(double)

}  // namespace mra::epmem
