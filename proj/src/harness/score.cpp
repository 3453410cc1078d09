// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/harness/score.hpp"

#include <cmath>

#include "mra/common/errors.hpp"

namespace mra::harness {

std::vector<double> ewma(const std::vector<double>& xs, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ContractError("ewma: alpha must lie in (0, 1]");
  return ewma(xs, std::vector<double>(xs.size(), alpha));
}

std::vector<double> ewma(const std::vector<double>& xs, const std::vector<double>& alphas) {
  if (xs.empty()) throw ContractError("ewma: empty series");
  if (alphas.size() != xs.size()) throw ContractError("ewma: one alpha per point required");
  std::vector<double> s(xs.size());
  s[0] = xs[0];
  for (std::size_t t = 1; t < xs.size(); ++t) {
    const double a = alphas[t];
    if (!(a > 0.0 && a <= 1.0)) throw ContractError("ewma: alpha must lie in (0, 1]");
    s[t] = a * xs[t] + (1.0 - a) * s[t - 1];
  }
  return s;
}

std::vector<double> rolling_mean(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) throw ContractError("rolling_mean: window must be positive");
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    sum += xs[t];
    if (t >= window) sum -= xs[t - window];
    out[t] = sum / static_cast<double>(std::min(t + 1, window));
  }
  return out;
}

double point_alpha(double episode_alpha, double episodes) {
  if (!(episode_alpha > 0.0 && episode_alpha <= 1.0)) throw ContractError("point_alpha: alpha must lie in (0, 1]");
  if (episodes < 1.0) return episode_alpha;
  return 1.0 - std::pow(1.0 - episode_alpha, episodes);
}

double normalized_score(double r, double r_random, double r_oracle) {
  if (!(r_oracle > r_random)) throw ContractError("normalized_score: oracle reward must exceed random reward");
  return (r - r_random) / (r_oracle - r_random) * 100.0;
}

SeedScore score_seed(const SeedCurves& c, const Baselines& b, double episode_alpha, std::size_t window) {
  const std::size_t n = c.train.size();
  if (n == 0) throw ContractError("score_seed: empty curves");
  if (c.interpolate.size() != n || c.extrapolate.size() != n || c.steps.size() != n || c.episodes.size() != n) {
    throw ContractError("score_seed: curves differ in length");
  }
  std::vector<double> alphas(n);
  for (std::size_t t = 0; t < n; ++t) alphas[t] = point_alpha(episode_alpha, c.episodes[t]);
  const std::vector<double>* curves[3] = {&c.train, &c.interpolate, &c.extrapolate};
  std::vector<double> rolled[3];
  for (int l = 0; l < 3; ++l) rolled[l] = rolling_mean(ewma(*curves[l], alphas), window);
  SeedScore s;
  for (std::size_t t = 1; t < n; ++t) {
    if (rolled[0][t] > rolled[0][s.snapshot]) s.snapshot = t;
  }
  s.snapshot_step = c.steps[s.snapshot];
  for (int l = 0; l < 3; ++l) {
    s.reward[l] = rolled[l][s.snapshot];
    s.score[l] = normalized_score(s.reward[l], b.random[l], b.oracle[l]);
  }
  return s;
}

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  a.n = xs.size();
  if (xs.empty()) return a;
  double sum = 0.0;
  for (double x : xs) sum += x;
  a.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return a;
}

}  // namespace mra::harness
