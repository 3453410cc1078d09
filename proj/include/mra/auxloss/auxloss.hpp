// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Contrastive predictive coding and reconstruction losses over one unroll.
//
// Parameter ids: cpc/w1 .. cpc/wN, each [embed x hidden];
// rec/reward_w rec/reward_b rec/action_w rec/action_b
// rec/dec_w1 rec/dec_b1 rec/dec_w2 rec/dec_b2.

#pragma once

#include <string>
#include <vector>

#include "mra/diffcore/init.hpp"
#include "mra/diffcore/ops.hpp"
#include "mra/diffcore/params.hpp"

namespace mra::auxloss {

using diffcore::ParamBinding;
using diffcore::ParameterSet;
using diffcore::Tensor;
using diffcore::Var;

struct CpcConfig {
  std::size_t steps = 10;
  double weight = 10.0;
};

struct RecConfig {
  double c_image = 1.0;
  double c_action = 1.0;
  double c_reward = 1.0;
};

std::string cpc_param_id(std::size_t k);

template <typename T>
void init_cpc_params(ParameterSet<T>& params, const CpcConfig& cfg, std::size_t embed, std::size_t hidden,
                     diffcore::Rng& rng);

template <typename T>
void init_rec_params(ParameterSet<T>& params, std::size_t hidden, std::size_t num_actions, std::size_t obs_size,
                     std::size_t decoder_hidden, diffcore::Rng& rng);

// exp(x^T W h)
template <typename T>
Var<T> cpc_score(Var<T> x_future, Var<T> h, Var<T> w);

// Mean over (t, k) of the cross-entropy of x_{t+k} among candidates
// x_k .. x_{T-1} scored by x^T W_k h_t, times cfg.weight. Targets are
// stop-gradient.
template <typename T>
Var<T> cpc_loss(ParamBinding<T>& pb, const std::vector<Var<T>>& h_states, const std::vector<Var<T>>& x_embeds,
                const CpcConfig& cfg);

struct RecTargets {
  std::vector<double> prev_rewards;
  // -1 where no previous action exists (zero target).
  std::vector<int> prev_actions;
  std::size_t num_actions = 0;
};

template <typename T>
struct RecBreakdown {
  Var<T> total;
  Var<T> reward;
  Var<T> action;
  Var<T> image;
};

template <typename T>
RecBreakdown<T> rec_loss(ParamBinding<T>& pb, const std::vector<Var<T>>& h_states, const RecTargets& targets,
                         const std::vector<Tensor<T>>& observations, const RecConfig& cfg);

}  // namespace mra::auxloss
