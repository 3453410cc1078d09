// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "mra/common/errors.hpp"
#include "mra/simd/kernels.hpp"

namespace mra::simd {
namespace {

constexpr int kUnset = -1;
std::atomic<int> g_forced{kUnset};

Isa detect() {
  const char* env = std::getenv("MRA_SIMD");
  if (env != nullptr) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  }
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced != kUnset) return static_cast<Isa>(forced);
  static const Isa detected = detect();
  return detected;
}

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw ContractError("force_isa: " + std::string(isa_name(isa)) + " is not supported on this CPU");
  }
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

template <typename T>
const KernelTable<T>& kernels(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::kAvx2) {
    if (!isa_supported(Isa::kAvx2)) {
      throw ContractError("kernels: avx2 requested but not supported");
    }
    return detail::avx2_table<T>();
  }
#else
  if (isa != Isa::kScalar) throw ContractError("kernels: only scalar kernels are built on this target");
#endif
  return detail::scalar_table<T>();
}

template <typename T>
const KernelTable<T>& kernels() {
  return kernels<T>(active_isa());
}

template const KernelTable<float>& kernels<float>(Isa);
template const KernelTable<double>& kernels<double>(Isa);
template const KernelTable<float>& kernels<float>();
template const KernelTable<double>& kernels<double>();

}  // namespace mra::simd
