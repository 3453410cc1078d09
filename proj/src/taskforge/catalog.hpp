// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace mra::taskforge {

// Goal spawn regions.
inline constexpr int kRegionNW = 0, kRegionNE = 1, kRegionSW = 2, kRegionSE = 3, kRegionNorth = 4,
                     kRegionSouth = 5;

namespace catalog {

inline constexpr int kNumImages = 200;
inline constexpr int kFirstColor = kNumImages;
inline constexpr int kNumColors = 27;
inline constexpr int kFirstDigit = kFirstColor + kNumColors;
inline constexpr int kFirstMotion = kFirstDigit + 10;
inline constexpr int kNumMotions = 12;
inline constexpr int kCatalogSize = kFirstMotion + kNumMotions;

int color(const std::string& name);
int digit(int d);
int motion(int index);
int motion_index(int id);
std::string label(int id);

}  // namespace catalog
}  // namespace mra::taskforge
