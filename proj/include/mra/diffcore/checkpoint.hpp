// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Binary parameter container shared by every module:
//
//   "MRA1"                                   4 bytes magic
//   u32 entry count
//   per entry: u32 id length, id bytes, u8 dtype code (1 = f32, 2 = f64),
//              u32 rank, u64 dims[rank]
//   raw little-endian payloads in header order
//   u64 version counter
//
// All integers are little-endian.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mra/diffcore/params.hpp"

namespace mra::diffcore {

template <typename T>
std::string encode_checkpoint(const ParameterSet<T>& params);

// Throws ContractError on a malformed container or when a stored dtype
// differs from T.
template <typename T>
ParameterSet<T> decode_checkpoint(std::string_view bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParameterSet<T>& params);

template <typename T>
ParameterSet<T> load_checkpoint(const std::filesystem::path& path);

// Reads only the dtype of the first entry (kFloat32 for an empty container).
DType checkpoint_dtype(std::string_view bytes);

}  // namespace mra::diffcore
