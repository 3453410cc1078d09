// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/learner/optimizer.hpp"

#include <cmath>

#include "mra/common/errors.hpp"

namespace mra::learner {

template <typename T>
double Optimizer<T>::step(ParameterSet<T>& params, const GradientMap<T>& grads) {
  const double norm = static_cast<double>(diffcore::global_norm(grads));
  if (!std::isfinite(norm)) throw NumericError("optimizer: non-finite gradient norm");
  const double clip = (cfg_.clip_norm > 0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;
  ++steps_;
  const double lr = cfg_.learning_rate;
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (auto& [id, p] : params) {
    auto git = grads.find(id);
    if (git == grads.end()) continue;
    const Tensor<T>& g = git->second;
    if (g.size() != p.size()) throw DimensionError("optimizer: gradient shape mismatch for '" + id + "'");
    auto& m = m_.try_emplace(id, p.shape()).first->second;
    if (cfg_.kind == OptimizerKind::kAdam) {
      auto& v = v_.try_emplace(id, p.shape()).first->second;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(g[i]) * clip;
        const double mi = b1 * static_cast<double>(m[i]) + (1 - b1) * gi;
        const double vi = b2 * static_cast<double>(v[i]) + (1 - b2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        p[i] -= static_cast<T>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.adam_epsilon));
      }
    } else {
      auto& ms = v_.try_emplace(id, p.shape()).first->second;
      const double d = cfg_.rms_decay;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(g[i]) * clip;
        const double si = d * static_cast<double>(ms[i]) + (1 - d) * gi * gi;
        const double mom = cfg_.rms_momentum * static_cast<double>(m[i]) + lr * gi / std::sqrt(si + cfg_.rms_epsilon);
        ms[i] = static_cast<T>(si);
        m[i] = static_cast<T>(mom);
        p[i] -= static_cast<T>(mom);
      }
    }
  }
  params.bump_version();
  return norm;
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace mra::learner
