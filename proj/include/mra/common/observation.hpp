// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace mra {

// Either a flat vector of `vector_size` values or a channel-last
// height x width x channels grid.
struct ObservationSpec {
  std::size_t vector_size = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  bool is_grid() const { return height > 0; }
  std::size_t flat_size() const { return is_grid() ? height * width * channels : vector_size; }

  static ObservationSpec vector(std::size_t n) { return {n, 0, 0, 0}; }
  static ObservationSpec grid(std::size_t h, std::size_t w, std::size_t c) { return {0, h, w, c}; }

  friend bool operator==(const ObservationSpec&, const ObservationSpec&) = default;
};

// Values lie in [0, 1].
using Observation = std::vector<float>;

}  // namespace mra
