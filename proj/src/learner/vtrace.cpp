// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/learner/vtrace.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "mra/common/errors.hpp"

namespace mra::learner {

using diffcore::Shape;
using diffcore::Tensor;

VTraceOutput vtrace_targets(const VTraceInput& in, const VTraceConfig& cfg) {
  const std::size_t n = in.actions.size();
  if (in.rewards.size() != n || in.dones.size() != n || in.behavior_logits.size() != n ||
      in.target_logits.size() != n || in.values.size() != n + 1) {
    throw DimensionError("vtrace_targets: inconsistent sequence lengths");
  }
  if (cfg.rho_bar < cfg.c_bar) throw ContractError("vtrace_targets: rho_bar must be >= c_bar");
  VTraceOutput out;
  out.vs.resize(n);
  out.advantages.resize(n);
  out.rhos.resize(n);
  out.log_ratios.resize(n);
  std::vector<double> cs(n), disc(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& mu_logits = in.behavior_logits[t];
    const auto& pi_logits = in.target_logits[t];
    if (mu_logits.size() != pi_logits.size()) throw DimensionError("vtrace_targets: logits width mismatch");
    const auto a = static_cast<std::size_t>(in.actions[t]);
    if (in.actions[t] < 0 || a >= mu_logits.size()) throw ContractError("vtrace_targets: action out of range");
    const double log_mu = diffcore::log_softmax_values<double>(mu_logits)[a];
    if (std::exp(log_mu) < 1e-20) {
      throw NumericError("vtrace_targets: behavior probability underflow at step " + std::to_string(t));
    }
    const double log_pi = diffcore::log_softmax_values<double>(pi_logits)[a];
    const double ratio = std::exp(log_pi - log_mu);
    out.log_ratios[t] = log_pi - log_mu;
    out.rhos[t] = std::min(cfg.rho_bar, ratio);
    cs[t] = std::min(cfg.c_bar, ratio);
    disc[t] = in.dones[t] ? 0.0 : cfg.gamma;
  }
  double acc = 0.0;  // vs_{t+1} - V_{t+1}
  for (std::size_t i = n; i-- > 0;) {
    const double delta = out.rhos[i] * (in.rewards[i] + disc[i] * in.values[i + 1] - in.values[i]);
    acc = delta + disc[i] * cs[i] * acc;
    out.vs[i] = in.values[i] + acc;
  }
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? out.vs[t + 1] : in.values[n];
    out.advantages[t] = out.rhos[t] * (in.rewards[t] + disc[t] * next - in.values[t]);
  }
  return out;
}

template <typename T>
RlLoss<T> rl_loss(const std::vector<Var<T>>& policy_logits, const std::vector<Var<T>>& values,
                  const std::vector<int>& actions, const VTraceOutput& targets, double entropy_cost,
                  double baseline_cost) {
  using namespace diffcore;
  const std::size_t n = policy_logits.size();
  if (n == 0) throw ContractError("rl_loss: empty trajectory");
  if (values.size() != n || actions.size() != n || targets.vs.size() != n || targets.advantages.size() != n) {
    throw DimensionError("rl_loss: inconsistent sequence lengths");
  }
  Tape<T>& tape = *policy_logits[0].tape;
  std::vector<Var<T>> nll, ent, vals;
  nll.reserve(n);
  ent.reserve(n);
  vals.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    nll.push_back(softmax_xent(policy_logits[t], static_cast<std::size_t>(actions[t])));
    ent.push_back(softmax_entropy(policy_logits[t]));
    vals.push_back(values[t]);
  }
  std::vector<T> adv(targets.advantages.begin(), targets.advantages.end());
  std::vector<T> vs(targets.vs.begin(), targets.vs.end());
  Var<T> adv_c = tape.constant(Tensor<T>::vector(std::move(adv)));
  Var<T> vs_c = tape.constant(Tensor<T>::vector(std::move(vs)));
  RlLoss<T> out;
  out.policy = dot(concat(std::span<const Var<T>>(nll)), adv_c);
  out.baseline = scale(sum(square(sub(vs_c, concat(std::span<const Var<T>>(vals))))),
                       static_cast<T>(0.5 * baseline_cost));
  out.entropy = scale(sum(concat(std::span<const Var<T>>(ent))), static_cast<T>(-entropy_cost));
  out.total = add(add(out.policy, out.baseline), out.entropy);
  return out;
}

template RlLoss<float> rl_loss<float>(const std::vector<Var<float>>&, const std::vector<Var<float>>&,
                                      const std::vector<int>&, const VTraceOutput&, double, double);
template RlLoss<double> rl_loss<double>(const std::vector<Var<double>>&, const std::vector<Var<double>>&,
                                        const std::vector<int>&, const VTraceOutput&, double, double);

}  // namespace mra::learner
