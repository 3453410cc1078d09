// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Slot-based episodic memory. Each slot stores an embedding p, a hidden state
// v and a cached key k = W_k [p, v] + b_k computed when the slot was written.
// Reads select the K nearest slots by distance between the query and the
// CACHED keys, then weight them by inverse squared distance to keys
// RECOMPUTED with the current W_k, b_k. Stored p and v are constants to the
// read unless the write was linked, in which case gradients reach the tape
// nodes that produced them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mra/diffcore/init.hpp"
#include "mra/diffcore/ops.hpp"
#include "mra/diffcore/params.hpp"

namespace mra::epmem {

using diffcore::ParameterSet;
using diffcore::Tensor;
using diffcore::Var;

struct MemoryConfig {
  std::size_t capacity = 1024;
  std::size_t neighbors = 10;
  std::size_t key_size = 128;
  double epsilon = 1e-3;
};

// Capacity 2048 for grid-world families, 1024 otherwise; K = 10; key 128.
MemoryConfig default_memory_config(bool grid_family);

template <typename T>
struct MemorySlot {
  Tensor<T> p;
  Tensor<T> v;
  Tensor<T> k;
  std::int64_t write_step = -1;
  // Only set for linked writes, and only meaningful on the tape that
  // produced them.
  std::optional<Var<T>> live_p;
  std::optional<Var<T>> live_v;
};

enum class WriteMode {
  kDetached,  // p, v stored without tape linkage (jumpy backpropagation)
  kLinked,    // p, v keep their tape nodes for reads within the same tape
};

template <typename T>
class EpisodicBuffer {
 public:
  EpisodicBuffer() = default;
  EpisodicBuffer(std::size_t capacity, std::size_t embed, std::size_t hidden);

  std::size_t capacity() const { return capacity_; }
  std::size_t count() const { return count_; }
  std::size_t next_index() const { return next_; }
  std::size_t embed_size() const { return embed_; }
  std::size_t hidden_size() const { return hidden_; }
  const MemorySlot<T>& slot(std::size_t i) const { return slots_.at(i); }

  // Writes into the least recently written slot; returns its index.
  std::size_t store(MemorySlot<T> slot);
  void reset();
  // Copy with every live tape link dropped.
  EpisodicBuffer detached() const;

 private:
  // Grows up to capacity_ on first fill.
  std::vector<MemorySlot<T>> slots_;
  std::size_t capacity_ = 0;
  std::size_t next_ = 0;
  std::size_t count_ = 0;
  std::size_t embed_ = 0;
  std::size_t hidden_ = 0;
};

template <typename T>
struct WriteResult {
  std::size_t index = 0;
  // k_i on the tape; differentiable in W_k, b_k only.
  Var<T> key;
};

template <typename T>
WriteResult<T> write(EpisodicBuffer<T>& buffer, Var<T> x, Var<T> h, Var<T> key_w, Var<T> key_b,
                     std::int64_t step, WriteMode mode = WriteMode::kDetached);

// q = W_q [x, h_prev] + b_q
template <typename T>
Var<T> query(Var<T> x, Var<T> h_prev, Var<T> query_w, Var<T> query_b);

template <typename T>
struct ReadResult {
  Var<T> m;
  std::vector<std::size_t> neighbors;
  std::vector<T> weights;
};

template <typename T>
ReadResult<T> read(const EpisodicBuffer<T>& buffer, Var<T> q, std::size_t k, Var<T> key_w, Var<T> key_b,
                   T epsilon);

// The K slots nearest to q under cached keys, nearest first; ties go to the
// older write.
template <typename T>
std::vector<std::size_t> select_neighbors(const EpisodicBuffer<T>& buffer, std::span<const T> q, std::size_t k);

// Adds mem/key_w, mem/key_b, mem/query_w, mem/query_b.
template <typename T>
void init_memory_params(ParameterSet<T>& params, std::size_t embed, std::size_t hidden, std::size_t key_size,
                        diffcore::Rng& rng);

// Per-episode read/write log written as CSV (step, write_index,
// neighbor_indices, weights); list columns are ';'-separated.
class MemoryTrace {
 public:
  void record(std::int64_t step, std::size_t write_index, const std::vector<std::size_t>& neighbors,
              const std::vector<double>& weights);
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  std::size_t rows() const { return rows_.size(); }
  void clear() { rows_.clear(); }

 private:
  struct Row {
    std::int64_t step;
    std::size_t write_index;
    std::vector<std::size_t> neighbors;
    std::vector<double> weights;
  };
  std::vector<Row> rows_;
};

extern template class EpisodicBuffer<float>;
extern template class EpisodicBuffer<double>;

}  // namespace mra::epmem
