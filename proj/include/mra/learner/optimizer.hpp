// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "mra/diffcore/params.hpp"

namespace mra::learner {

using diffcore::GradientMap;
using diffcore::ParameterSet;
using diffcore::Tensor;

enum class OptimizerKind { kAdam, kRmsProp };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-4;
  double rms_epsilon = 0.1;
  double rms_momentum = 0.0;
  double rms_decay = 0.99;
  // Global-norm clip; 0 disables.
  double clip_norm = 40.0;
};

template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update and bumps the parameter version. Returns the
  // gradient norm before clipping.
  double step(ParameterSet<T>& params, const GradientMap<T>& grads);

  const OptimizerConfig& config() const { return cfg_; }
  std::uint64_t steps() const { return steps_; }

 private:
  OptimizerConfig cfg_;
  std::map<std::string, Tensor<T>> m_;
  std::map<std::string, Tensor<T>> v_;
  std::uint64_t steps_ = 0;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace mra::learner
