// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mra/diffcore/ops.hpp"

namespace mra::learner {

using diffcore::Var;

struct VTraceConfig {
  double gamma = 0.99;
  double rho_bar = 1.0;
  double c_bar = 1.0;
};

struct VTraceInput {
  std::vector<int> actions;                         // [T]
  std::vector<double> rewards;                      // [T]
  std::vector<std::uint8_t> dones;                  // [T]
  std::vector<std::vector<double>> behavior_logits; // [T][A]
  std::vector<std::vector<double>> target_logits;   // [T][A]
  std::vector<double> values;                       // [T + 1], last is the bootstrap
};

struct VTraceOutput {
  std::vector<double> vs;          // [T]
  std::vector<double> advantages;  // [T]
  std::vector<double> rhos;        // clipped, [T]
  std::vector<double> log_ratios;  // log pi - log mu, [T]
};

// Throws NumericError when a behavior probability falls below 1e-20.
VTraceOutput vtrace_targets(const VTraceInput& in, const VTraceConfig& cfg);

template <typename T>
struct RlLoss {
  Var<T> total;
  Var<T> policy;
  Var<T> baseline;
  Var<T> entropy;
};

// policy: -sum log pi(a) adv; baseline: cost/2 sum (vs - V)^2;
// entropy: -cost sum H(pi). Targets enter as constants.
template <typename T>
RlLoss<T> rl_loss(const std::vector<Var<T>>& policy_logits, const std::vector<Var<T>>& values,
                  const std::vector<int>& actions, const VTraceOutput& targets, double entropy_cost,
                  double baseline_cost);

}  // namespace mra::learner
