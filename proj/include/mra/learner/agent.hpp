// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// One agent step: encode, query and read memory, advance the core, emit
// policy/value, write (x_t, h_t) to memory.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mra/auxloss/auxloss.hpp"
#include "mra/common/environment.hpp"
#include "mra/controller/controller.hpp"
#include "mra/epmem/episodic_memory.hpp"

namespace mra::learner {

using diffcore::ParamBinding;
using diffcore::ParameterSet;
using diffcore::Tensor;
using diffcore::Var;

enum class AuxKind { kNone, kCpc, kRec };

struct AgentConfig {
  controller::ControllerConfig ctrl;
  epmem::MemoryConfig mem;
  AuxKind aux = AuxKind::kNone;
  auxloss::CpcConfig cpc;
  auxloss::RecConfig rec;
  std::size_t rec_decoder_hidden = 128;
  bool jumpy = true;
};

template <typename T>
ParameterSet<T> init_agent_params(const AgentConfig& cfg, std::uint64_t seed);

template <typename T>
struct AgentState {
  Tensor<T> h;
  Tensor<T> c;
  epmem::EpisodicBuffer<T> memory;
  std::int64_t step = 0;
};

template <typename T>
AgentState<T> initial_agent_state(const AgentConfig& cfg);

template <typename T>
struct StepOutput {
  Var<T> x;
  Var<T> h;
  Var<T> c;
  Var<T> logits;
  Var<T> value;
  std::vector<std::size_t> neighbors;
  std::vector<T> weights;
  std::size_t write_index = 0;
};

template <typename T>
StepOutput<T> agent_step(ParamBinding<T>& pb, const AgentConfig& cfg, Var<T> obs, Var<T> h_prev, Var<T> c_prev,
                         epmem::EpisodicBuffer<T>& memory, std::int64_t step, epmem::WriteMode mode);

template <typename T>
struct ActResult {
  std::vector<T> logits;
  T value = 0;
  std::vector<std::size_t> neighbors;
  std::vector<T> weights;
  std::size_t write_index = 0;
};

// Inference step on a throwaway tape; advances `state`.
template <typename T>
ActResult<T> act(const ParameterSet<T>& params, const AgentConfig& cfg, AgentState<T>& state, const Observation& obs);

template <typename T>
Tensor<T> observation_tensor(const Observation& obs);

// Portable sampling from softmax(logits), or argmax when greedy.
int sample_action(std::span<const float> logits, std::mt19937_64& rng, bool greedy);
int sample_action(std::span<const double> logits, std::mt19937_64& rng, bool greedy);
double uniform01(std::mt19937_64& rng);

}  // namespace mra::learner
