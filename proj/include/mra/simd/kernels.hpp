// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Inner-loop vector kernels. Every kernel has a portable scalar reference
// implementation; on x86-64 an AVX2+FMA variant is selected at runtime when
// the CPU supports it. The active instruction set can be forced with the
// MRA_SIMD environment variable ("scalar" or "avx2") or with force_isa().

#pragma once

#include <cstddef>
#include <string_view>

namespace mra::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

template <typename T>
struct KernelTable {
  T (*dot)(const T* x, const T* y, std::size_t n);
  // y += a * x
  void (*axpy)(T a, const T* x, T* y, std::size_t n);
  // sum_i (x_i - y_i)^2
  T (*sq_dist)(const T* x, const T* y, std::size_t n);
  // z = x + y
  void (*add)(const T* x, const T* y, T* z, std::size_t n);
  // z = x * y
  void (*mul)(const T* x, const T* y, T* z, std::size_t n);
  T (*sum)(const T* x, std::size_t n);
};

bool isa_supported(Isa isa);

// Best supported ISA, unless overridden by MRA_SIMD or force_isa().
Isa active_isa();

// Overrides the dispatch choice process-wide. Throws ContractError when the
// CPU lacks the requested ISA.
void force_isa(Isa isa);

template <typename T>
const KernelTable<T>& kernels(Isa isa);

template <typename T>
const KernelTable<T>& kernels();

template <typename T>
inline T dot(const T* x, const T* y, std::size_t n) {
  return kernels<T>().dot(x, y, n);
}

template <typename T>
inline void axpy(T a, const T* x, T* y, std::size_t n) {
  kernels<T>().axpy(a, x, y, n);
}

template <typename T>
inline T sq_dist(const T* x, const T* y, std::size_t n) {
  return kernels<T>().sq_dist(x, y, n);
}

template <typename T>
inline void add(const T* x, const T* y, T* z, std::size_t n) {
  kernels<T>().add(x, y, z, n);
}

template <typename T>
inline void mul(const T* x, const T* y, T* z, std::size_t n) {
  kernels<T>().mul(x, y, z, n);
}

template <typename T>
inline T sum(const T* x, std::size_t n) {
  return kernels<T>().sum(x, n);
}

namespace detail {
template <typename T>
const KernelTable<T>& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
template <typename T>
const KernelTable<T>& avx2_table();
#endif
}  // namespace detail

}  // namespace mra::simd
