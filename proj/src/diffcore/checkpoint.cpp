// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/diffcore/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "mra/common/errors.hpp"

namespace mra::diffcore {
namespace {

constexpr char kMagic[4] = {'M', 'R', 'A', '1'};

template <typename U>
void put(std::string& out, U value) {
  char buf[sizeof(U)];
  std::memcpy(buf, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    char buf[sizeof(U)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(U));
    pos_ += sizeof(U);
    U value;
    std::memcpy(&value, buf, sizeof(U));
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ContractError("checkpoint: truncated container");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct Entry {
  std::string id;
  DType dtype;
  Shape shape;
};

std::vector<Entry> read_header(Reader& r) {
  const std::string_view magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ContractError("checkpoint: bad magic");
  const auto count = r.get<std::uint32_t>();
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const auto len = r.get<std::uint32_t>();
    e.id = std::string(r.take(len));
    const auto code = r.get<std::uint8_t>();
    if (code != 1 && code != 2) throw ContractError("checkpoint: unknown dtype code " + std::to_string(code));
    e.dtype = static_cast<DType>(code);
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

template <typename T>
std::string encode_checkpoint(const ParameterSet<T>& params) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [id, tensor] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.append(id);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) put<std::uint64_t>(out, d);
  }
  for (const auto& [_, tensor] : params) {
    for (T v : tensor.values()) put<T>(out, v);
  }
  put<std::uint64_t>(out, params.version());
  return out;
}

template <typename T>
ParameterSet<T> decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  const std::vector<Entry> entries = read_header(r);
  ParameterSet<T> params;
  for (const Entry& e : entries) {
    if (e.dtype != dtype_of<T>()) {
      throw ContractError("checkpoint: parameter '" + e.id + "' has a different dtype than requested");
    }
    Tensor<T> t(e.shape);
    for (T& v : t.storage()) v = r.get<T>();
    params.add(e.id, std::move(t));
  }
  params.set_version(r.get<std::uint64_t>());
  if (!r.at_end()) throw ContractError("checkpoint: trailing bytes after version counter");
  return params;
}

DType checkpoint_dtype(std::string_view bytes) {
  Reader r(bytes);
  const std::vector<Entry> entries = read_header(r);
  return entries.empty() ? DType::kFloat32 : entries.front().dtype;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParameterSet<T>& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open checkpoint for writing: " + path.string());
  const std::string bytes = encode_checkpoint(params);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
ParameterSet<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint<T>(bytes);
}

template std::string encode_checkpoint<float>(const ParameterSet<float>&);
template std::string encode_checkpoint<double>(const ParameterSet<double>&);
template ParameterSet<float> decode_checkpoint<float>(std::string_view);
template ParameterSet<double> decode_checkpoint<double>(std::string_view);
template void save_checkpoint<float>(const std::filesystem::path&, const ParameterSet<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const ParameterSet<double>&);
template ParameterSet<float> load_checkpoint<float>(const std::filesystem::path&);
template ParameterSet<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace mra::diffcore
