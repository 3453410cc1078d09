// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/auxloss/auxloss.hpp"

#include <cmath>

#include "mra/common/errors.hpp"

namespace mra::auxloss {

using diffcore::Shape;

std::string cpc_param_id(std::size_t k) { return "cpc/w" + std::to_string(k); }

template <typename T>
void init_cpc_params(ParameterSet<T>& params, const CpcConfig& cfg, std::size_t embed, std::size_t hidden,
                     diffcore::Rng& rng) {
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    params.add(cpc_param_id(k), diffcore::uniform_fan_in<T>(Shape{embed, hidden}, hidden, rng));
  }
}

template <typename T>
void init_rec_params(ParameterSet<T>& params, std::size_t hidden, std::size_t num_actions, std::size_t obs_size,
                     std::size_t decoder_hidden, diffcore::Rng& rng) {
  using diffcore::uniform_fan_in;
  params.add("rec/reward_w", uniform_fan_in<T>(Shape{1, hidden}, hidden, rng));
  params.add("rec/reward_b", Tensor<T>(Shape{1}));
  params.add("rec/action_w", uniform_fan_in<T>(Shape{num_actions, hidden}, hidden, rng));
  params.add("rec/action_b", Tensor<T>(Shape{num_actions}));
  params.add("rec/dec_w1", uniform_fan_in<T>(Shape{decoder_hidden, hidden}, hidden, rng));
  params.add("rec/dec_b1", Tensor<T>(Shape{decoder_hidden}));
  params.add("rec/dec_w2", uniform_fan_in<T>(Shape{obs_size, decoder_hidden}, decoder_hidden, rng));
  params.add("rec/dec_b2", Tensor<T>(Shape{obs_size}));
}

template <typename T>
Var<T> cpc_score(Var<T> x_future, Var<T> h, Var<T> w) {
  Var<T> s = diffcore::exp(diffcore::dot(x_future, diffcore::matvec(w, h)));
  if (!std::isfinite(static_cast<double>(s.value().item()))) throw NumericError("cpc_score: non-finite score");
  return s;
}

template <typename T>
Var<T> cpc_loss(ParamBinding<T>& pb, const std::vector<Var<T>>& h_states, const std::vector<Var<T>>& x_embeds,
                const CpcConfig& cfg) {
  using namespace diffcore;
  const std::size_t n = h_states.size();
  if (n < 2) throw ContractError("cpc_loss: need at least 2 steps, got " + std::to_string(n));
  if (x_embeds.size() != n) throw DimensionError("cpc_loss: h and x sequences differ in length");
  if (cfg.steps == 0 || cfg.steps > n - 1) {
    throw ContractError("cpc_loss: steps " + std::to_string(cfg.steps) + " must lie in [1, " +
                        std::to_string(n - 1) + "]");
  }
  const std::size_t embed = x_embeds[0].size();
  std::vector<Var<T>> targets;
  targets.reserve(n);
  for (const auto& x : x_embeds) targets.push_back(stop_gradient(x));

  std::vector<Var<T>> terms;
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    const std::size_t m = n - k;
    Var<T> cands = reshape(concat(std::span<const Var<T>>(targets.data() + k, m)), Shape{m, embed});
    Var<T> w = pb(cpc_param_id(k));
    for (std::size_t t = 0; t + k < n; ++t) {
      Var<T> logits = matvec(cands, matvec(w, h_states[t]));
      terms.push_back(softmax_xent(logits, t));
    }
  }
  Var<T> total = sum(concat(std::span<const Var<T>>(terms)));
  return scale(total, static_cast<T>(cfg.weight / static_cast<double>(terms.size())));
}

template <typename T>
RecBreakdown<T> rec_loss(ParamBinding<T>& pb, const std::vector<Var<T>>& h_states, const RecTargets& targets,
                         const std::vector<Tensor<T>>& observations, const RecConfig& cfg) {
  using namespace diffcore;
  const std::size_t n = h_states.size();
  if (n == 0) throw ContractError("rec_loss: empty sequence");
  if (targets.prev_rewards.size() != n || targets.prev_actions.size() != n || observations.size() != n) {
    throw DimensionError("rec_loss: sequences must share length " + std::to_string(n));
  }
  if (cfg.c_image < 0 || cfg.c_action < 0 || cfg.c_reward < 0) throw ContractError("rec_loss: negative cost");
  Tape<T>& tape = *h_states[0].tape;
  std::vector<Var<T>> r_terms, a_terms, i_terms;
  for (std::size_t t = 0; t < n; ++t) {
    Var<T> h = h_states[t];
    Var<T> r_hat = affine(pb("rec/reward_w"), h, pb("rec/reward_b"));
    Var<T> r_err = add_scalar(r_hat, static_cast<T>(-targets.prev_rewards[t]));
    r_terms.push_back(sum(square(r_err)));

    Tensor<T> onehot(Shape{targets.num_actions});
    const int a = targets.prev_actions[t];
    if (a >= 0) {
      if (static_cast<std::size_t>(a) >= targets.num_actions) throw ContractError("rec_loss: action out of range");
      onehot[static_cast<std::size_t>(a)] = T(1);
    }
    Var<T> a_hat = affine(pb("rec/action_w"), h, pb("rec/action_b"));
    a_terms.push_back(sum(square(sub(a_hat, tape.constant(std::move(onehot))))));

    Var<T> z = relu(affine(pb("rec/dec_w1"), h, pb("rec/dec_b1")));
    Var<T> logits = affine(pb("rec/dec_w2"), z, pb("rec/dec_b2"));
    i_terms.push_back(sigmoid_xent(logits, observations[t]));
  }
  RecBreakdown<T> out;
  out.reward = scale(sum(concat(std::span<const Var<T>>(r_terms))), T(0.5));
  out.action = scale(sum(concat(std::span<const Var<T>>(a_terms))), T(0.5));
  out.image = sum(concat(std::span<const Var<T>>(i_terms)));
  out.total = add(add(scale(out.image, static_cast<T>(cfg.c_image)), scale(out.action, static_cast<T>(cfg.c_action))),
                  scale(out.reward, static_cast<T>(cfg.c_reward)));
  return out;
}

#define MRA_AUXLOSS_INSTANTIATE(T)                                                                              \
  template void init_cpc_params<T>(ParameterSet<T>&, const CpcConfig&, std::size_t, std::size_t, diffcore::Rng&); \
  template void init_rec_params<T>(ParameterSet<T>&, std::size_t, std::size_t, std::size_t, std::size_t,       \
                                   diffcore::Rng&);                                                           \
  template Var<T> cpc_score<T>(Var<T>, Var<T>, Var<T>);                                                        \
  template Var<T> cpc_loss<T>(ParamBinding<T>&, const std::vector<Var<T>>&, const std::vector<Var<T>>&,        \
                              const CpcConfig&);                                                              \
  template RecBreakdown<T> rec_loss<T>(ParamBinding<T>&, const std::vector<Var<T>>&, const RecTargets&,        \
                                       const std::vector<Tensor<T>>&, const RecConfig&);

MRA_AUXLOSS_INSTANTIATE(float)
MRA_AUXLOSS_INSTANTIATE(double)

}  // namespace mra::auxloss
