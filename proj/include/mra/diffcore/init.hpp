// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>

#include "mra/diffcore/tensor.hpp"

namespace mra::diffcore {

using Rng = std::mt19937_64;

// Uniform in +-1/sqrt(fan_in).
template <typename T>
Tensor<T> uniform_fan_in(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : t.storage()) v = static_cast<T>(dist(rng));
  return t;
}

}  // namespace mra::diffcore
