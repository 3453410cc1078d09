// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/learner/agent.hpp"

#include <algorithm>
#include <cmath>

#include "mra/common/errors.hpp"

namespace mra::learner {

using diffcore::Shape;

template <typename T>
ParameterSet<T> init_agent_params(const AgentConfig& cfg, std::uint64_t seed) {
  ParameterSet<T> params;
  diffcore::Rng rng(seed);
  controller::init_controller_params(params, cfg.ctrl, rng);
  if (cfg.ctrl.mem) {
    epmem::init_memory_params(params, cfg.ctrl.embed, cfg.ctrl.hidden, cfg.mem.key_size, rng);
  }
  if (cfg.aux == AuxKind::kCpc) auxloss::init_cpc_params(params, cfg.cpc, cfg.ctrl.embed, cfg.ctrl.hidden, rng);
  if (cfg.aux == AuxKind::kRec) {
    auxloss::init_rec_params(params, cfg.ctrl.hidden, cfg.ctrl.num_actions, cfg.ctrl.obs.flat_size(),
                             cfg.rec_decoder_hidden, rng);
  }
  return params;
}

template <typename T>
AgentState<T> initial_agent_state(const AgentConfig& cfg) {
  AgentState<T> s;
  s.h = Tensor<T>(Shape{cfg.ctrl.hidden});
  s.c = Tensor<T>(Shape{cfg.ctrl.hidden});
  if (cfg.ctrl.mem) s.memory = epmem::EpisodicBuffer<T>(cfg.mem.capacity, cfg.ctrl.embed, cfg.ctrl.hidden);
  return s;
}

template <typename T>
StepOutput<T> agent_step(ParamBinding<T>& pb, const AgentConfig& cfg, Var<T> obs, Var<T> h_prev, Var<T> c_prev,
                         epmem::EpisodicBuffer<T>& memory, std::int64_t step, epmem::WriteMode mode) {
  StepOutput<T> out;
  out.x = controller::encode(pb, cfg.ctrl, obs);
  std::optional<Var<T>> m;
  if (cfg.ctrl.mem) {
    Var<T> q = epmem::query(out.x, h_prev, pb("mem/query_w"), pb("mem/query_b"));
    auto r = epmem::read(memory, q, cfg.mem.neighbors, pb("mem/key_w"), pb("mem/key_b"),
                         static_cast<T>(cfg.mem.epsilon));
    m = r.m;
    out.neighbors = std::move(r.neighbors);
    out.weights = std::move(r.weights);
  }
  if (cfg.ctrl.core == controller::CoreKind::kLstm) {
    auto s = controller::lstm_step(pb, out.x, m, {h_prev, c_prev});
    out.h = s.h;
    out.c = s.c;
  } else {
    out.h = controller::ff_step(pb, out.x, m);
    out.c = c_prev;
  }
  auto hd = controller::heads(pb, out.h);
  out.logits = hd.logits;
  out.value = hd.value;
  if (cfg.ctrl.mem) {
    out.write_index = epmem::write(memory, out.x, out.h, pb("mem/key_w"), pb("mem/key_b"), step, mode).index;
  }
  return out;
}

template <typename T>
Tensor<T> observation_tensor(const Observation& obs) {
  return Tensor<T>::vector(std::vector<T>(obs.begin(), obs.end()));
}

template <typename T>
ActResult<T> act(const ParameterSet<T>& params, const AgentConfig& cfg, AgentState<T>& state, const Observation& obs) {
  diffcore::Tape<T> tape;
  ParamBinding<T> pb(tape, params, false);
  auto out = agent_step(pb, cfg, tape.constant(observation_tensor<T>(obs)), tape.constant(state.h),
                        tape.constant(state.c), state.memory, state.step, epmem::WriteMode::kDetached);
  ActResult<T> r;
  r.logits = out.logits.value().storage();
  r.value = out.value.value().item();
  r.neighbors = std::move(out.neighbors);
  r.weights = std::move(out.weights);
  r.write_index = out.write_index;
  state.h = out.h.value();
  state.c = out.c.value();
  ++state.step;
  return r;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

template <typename T>
int sample_impl(std::span<const T> logits, std::mt19937_64& rng, bool greedy) {
  if (logits.empty()) throw ContractError("sample_action: empty logits");
  if (greedy) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  const auto p = diffcore::softmax_values<T>(logits);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += static_cast<double>(p[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace

int sample_action(std::span<const float> logits, std::mt19937_64& rng, bool greedy) {
  return sample_impl(logits, rng, greedy);
}
int sample_action(std::span<const double> logits, std::mt19937_64& rng, bool greedy) {
  return sample_impl(logits, rng, greedy);
}

#define MRA_AGENT_INSTANTIATE(T)                                                                             \
  template ParameterSet<T> init_agent_params<T>(const AgentConfig&, std::uint64_t);                         \
  template AgentState<T> initial_agent_state<T>(const AgentConfig&);                                        \
  template StepOutput<T> agent_step<T>(ParamBinding<T>&, const AgentConfig&, Var<T>, Var<T>, Var<T>,        \
                                       epmem::EpisodicBuffer<T>&, std::int64_t, epmem::WriteMode);         \
  template Tensor<T> observation_tensor<T>(const Observation&);                                             \
  template ActResult<T> act<T>(const ParameterSet<T>&, const AgentConfig&, AgentState<T>&, const Observation&);

MRA_AGENT_INSTANTIATE(float)
MRA_AGENT_INSTANTIATE(double)

}  // namespace mra::learner
