// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Score pipeline: per-seed EWMA smoothing, trailing rolling mean, train
// maximum, holdout values read at the train snapshot, normalization
// against random and oracle rewards, and aggregation over seeds.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mra::harness {

// s_0 = x_0; s_t = alpha x_t + (1 - alpha) s_{t-1}. ContractError for an
// empty series or alpha outside (0, 1].
std::vector<double> ewma(const std::vector<double>& xs, double alpha);
// Same recursion with a per-point alpha (alphas[0] is ignored).
std::vector<double> ewma(const std::vector<double>& xs, const std::vector<double>& alphas);

// Mean of the trailing `window` points; the first points average what is
// available.
std::vector<double> rolling_mean(const std::vector<double>& xs, std::size_t window);

// Per-point alpha equivalent to applying a per-episode alpha once for each
// of the `episodes` training episodes the point summarizes.
double point_alpha(double episode_alpha, double episodes);

// (r - r_random) / (r_oracle - r_random) * 100. ContractError unless
// r_oracle > r_random.
double normalized_score(double r, double r_random, double r_oracle);

// One seed's evaluation curves. All vectors have one entry per evaluation
// point.
struct SeedCurves {
  std::vector<std::uint64_t> steps;
  std::vector<double> train;
  std::vector<double> interpolate;
  std::vector<double> extrapolate;
  // Training episodes completed since the previous point.
  std::vector<double> episodes;
};

struct Baselines {
  // Indexed train, interpolate, extrapolate.
  double random[3] = {0, 0, 0};
  double oracle[3] = {0, 0, 0};
};

struct SeedScore {
  std::size_t snapshot = 0;  // index of the train maximum
  std::uint64_t snapshot_step = 0;
  double reward[3] = {0, 0, 0};
  double score[3] = {0, 0, 0};
};

SeedScore score_seed(const SeedCurves& c, const Baselines& b, double episode_alpha, std::size_t window);

struct Aggregate {
  double mean = 0.0;
  // Sample standard deviation over sqrt(n); 0 for a single value.
  double stderr_ = 0.0;
  std::size_t n = 0;
};

Aggregate aggregate(const std::vector<double>& xs);

}  // namespace mra::harness
