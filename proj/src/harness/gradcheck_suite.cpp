// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/harness/gradcheck_suite.hpp"

#include <random>

#include "mra/auxloss/auxloss.hpp"
#include "mra/learner/agent.hpp"
#include "mra/learner/vtrace.hpp"

namespace mra::harness {

using diffcore::ParamBinding;
using diffcore::ParameterSet;
using diffcore::Shape;
using diffcore::Tensor;
using diffcore::Var;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

NamedGradCheck lstm_mem_step(double h, double tol, std::uint64_t seed) {
  learner::AgentConfig cfg;
  cfg.ctrl.core = controller::CoreKind::kLstm;
  cfg.ctrl.mem = true;
  cfg.ctrl.obs = ObservationSpec::vector(6);
  cfg.ctrl.num_actions = 3;
  cfg.ctrl.embed = 4;
  cfg.ctrl.hidden = 5;
  cfg.ctrl.encoder_hidden = 6;
  cfg.mem.capacity = 8;
  cfg.mem.neighbors = 3;
  cfg.mem.key_size = 3;
  ParameterSet<double> params = learner::init_agent_params<double>(cfg, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  auto state = learner::initial_agent_state<double>(cfg);
  for (int t = 0; t < 5; ++t) {
    Observation o(6);
    for (float& v : o) v = u(rng);
    learner::act(params, cfg, state, o);
  }
  const Tensor<double> obs = random_tensor(Shape{6}, rng, 1.0);
  const Tensor<double> w_logits = random_tensor(Shape{3}, rng);
  const Tensor<double> w_h = random_tensor(Shape{5}, rng);
  const auto memory = state.memory;
  const Tensor<double> h0 = state.h, c0 = state.c;
  const std::int64_t step = state.step;
  diffcore::ScalarFn<double> f = [&](ParamBinding<double>& pb) {
    auto& tape = pb.tape();
    auto mem = memory;
    auto out = learner::agent_step(pb, cfg, tape.constant(obs), tape.constant(h0), tape.constant(c0), mem, step,
                                   epmem::WriteMode::kDetached);
    Var<double> loss = diffcore::dot(out.logits, tape.constant(w_logits));
    loss = diffcore::add(loss, diffcore::sum(out.value));
    return diffcore::add(loss, diffcore::dot(out.h, tape.constant(w_h)));
  };
  return {"lstm_mem_read_step", diffcore::grad_check(f, params, h, tol)};
}

NamedGradCheck cpc(double h, double tol, std::uint64_t seed) {
  const std::size_t T = 6, embed = 3, hidden = 4;
  auxloss::CpcConfig cfg;
  cfg.steps = 3;
  cfg.weight = 1.0;
  ParameterSet<double> params;
  diffcore::Rng rng(seed);
  auxloss::init_cpc_params(params, cfg, embed, hidden, rng);
  for (std::size_t t = 0; t < T; ++t) {
    params.add("in/h" + std::to_string(t), random_tensor(Shape{hidden}, rng));
    params.add("in/x" + std::to_string(t), random_tensor(Shape{embed}, rng));
  }
  diffcore::ScalarFn<double> f = [&](ParamBinding<double>& pb) {
    std::vector<Var<double>> hs, xs;
    for (std::size_t t = 0; t < T; ++t) {
      hs.push_back(pb("in/h" + std::to_string(t)));
      xs.push_back(pb("in/x" + std::to_string(t)));
    }
    return auxloss::cpc_loss(pb, hs, xs, cfg);
  };
  return {"cpc_T6_N3", diffcore::grad_check(f, params, h, tol)};
}

NamedGradCheck rec(double h, double tol, std::uint64_t seed) {
  const std::size_t T = 4, hidden = 4, actions = 3, obs = 5;
  auxloss::RecConfig cfg;
  cfg.c_image = 1.5;
  ParameterSet<double> params;
  diffcore::Rng rng(seed);
  auxloss::init_rec_params(params, hidden, actions, obs, 6, rng);
  std::vector<Tensor<double>> observations;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t t = 0; t < T; ++t) {
    params.add("in/h" + std::to_string(t), random_tensor(Shape{hidden}, rng));
    Tensor<double> o(Shape{obs});
    for (double& v : o.storage()) v = u(rng);
    observations.push_back(o);
  }
  auxloss::RecTargets targets{{0.0, 1.0, 0.0, 0.5}, {-1, 2, 0, 1}, actions};
  diffcore::ScalarFn<double> f = [&](ParamBinding<double>& pb) {
    std::vector<Var<double>> hs;
    for (std::size_t t = 0; t < T; ++t) hs.push_back(pb("in/h" + std::to_string(t)));
    return auxloss::rec_loss(pb, hs, targets, observations, cfg).total;
  };
  return {"rec", diffcore::grad_check(f, params, h, tol)};
}

NamedGradCheck rl(double h, double tol, std::uint64_t seed) {
  const std::size_t T = 4, A = 3;
  ParameterSet<double> params;
  std::mt19937_64 rng(seed);
  learner::VTraceInput in;
  for (std::size_t t = 0; t < T; ++t) {
    Tensor<double> logits = random_tensor(Shape{A}, rng);
    params.add("in/logits" + std::to_string(t), logits);
    params.add("in/value" + std::to_string(t), random_tensor(Shape{1}, rng));
    in.target_logits.emplace_back(logits.storage().begin(), logits.storage().end());
    Tensor<double> mu = random_tensor(Shape{A}, rng);
    in.behavior_logits.emplace_back(mu.storage().begin(), mu.storage().end());
    in.actions.push_back(static_cast<int>(t % A));
    in.rewards.push_back(t == 2 ? 1.0 : 0.0);
    in.dones.push_back(0);
    in.values.push_back(params.at("in/value" + std::to_string(t))[0]);
  }
  in.values.push_back(0.3);
  const learner::VTraceOutput targets = learner::vtrace_targets(in, {0.9, 1.0, 1.0});
  diffcore::ScalarFn<double> f = [&](ParamBinding<double>& pb) {
    std::vector<Var<double>> logits, values;
    for (std::size_t t = 0; t < T; ++t) {
      logits.push_back(pb("in/logits" + std::to_string(t)));
      values.push_back(pb("in/value" + std::to_string(t)));
    }
    return learner::rl_loss(logits, values, in.actions, targets, 0.01, 0.5).total;
  };
  return {"rl_loss_T4", diffcore::grad_check(f, params, h, tol)};
}

}  // namespace

std::vector<NamedGradCheck> standard_grad_checks(double h, double tol, std::uint64_t seed) {
  return {lstm_mem_step(h, tol, seed), cpc(h, tol, seed), rec(h, tol, seed), rl(h, tol, seed)};
}

}  // namespace mra::harness
