// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mra/learner/agent.hpp"
#include "mra/learner/optimizer.hpp"
#include "mra/learner/vtrace.hpp"

namespace mra::learner {

template <typename T>
struct Trajectory {
  std::vector<Observation> observations;  // T + 1
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<std::vector<T>> behavior_logits;
  // Reward and action preceding each step within its episode; -1 / 0 at
  // episode start.
  std::vector<int> prev_actions;
  std::vector<double> prev_rewards;
  // Detached snapshot taken when the unroll began.
  AgentState<T> initial_state;
  std::uint64_t params_version = 0;

  std::size_t length() const { return actions.size(); }
};

// Owns one environment plus the recurrent state carried across unrolls.
template <typename T>
class Actor {
 public:
  Actor(AgentConfig cfg, Environment& env, std::uint64_t seed);

  Trajectory<T> rollout(const ParameterSet<T>& snapshot, std::size_t unroll);
  // Returns of episodes completed since the last call.
  std::vector<double> take_returns();
  std::uint64_t frames() const { return frames_; }

 private:
  AgentConfig cfg_;
  Environment* env_;
  std::mt19937_64 rng_;
  AgentState<T> state_;
  Observation obs_;
  int prev_action_ = -1;
  double prev_reward_ = 0.0;
  double episode_return_ = 0.0;
  std::vector<double> finished_;
  std::uint64_t frames_ = 0;
};

struct LearnerConfig {
  VTraceConfig vtrace;
  OptimizerConfig optimizer;
  double entropy_cost = 0.01;
  double baseline_cost = 0.5;
  bool check_finite = false;
};

template <typename T>
struct BatchLoss {
  Var<T> total;
  double rl = 0.0;
  double aux = 0.0;
  double policy = 0.0;
  double baseline = 0.0;
  double entropy = 0.0;
  std::vector<VTraceOutput> vtrace;
};

// Teacher-forced replay of every trajectory on `pb`'s tape plus the
// configured auxiliary loss. Jumpy backpropagation detaches writes;
// otherwise in-unroll writes stay linked.
template <typename T>
BatchLoss<T> batch_loss(ParamBinding<T>& pb, const AgentConfig& agent, const LearnerConfig& cfg,
                        const std::vector<Trajectory<T>>& batch);

struct TrainMetrics {
  double total_loss = 0.0;
  double rl_loss = 0.0;
  double aux_loss = 0.0;
  double grad_norm = 0.0;
  std::uint64_t params_version = 0;
};

template <typename T>
class Learner {
 public:
  Learner(AgentConfig agent, LearnerConfig cfg, ParameterSet<T> params);

  // Throws NumericError on a non-finite loss; parameters are then untouched.
  TrainMetrics train_step(const std::vector<Trajectory<T>>& batch);

  const ParameterSet<T>& params() const { return params_; }
  ParameterSet<T>& mutable_params() { return params_; }
  const AgentConfig& agent_config() const { return agent_; }
  const LearnerConfig& config() const { return cfg_; }

 private:
  AgentConfig agent_;
  LearnerConfig cfg_;
  ParameterSet<T> params_;
  Optimizer<T> opt_;
};

// Append-only CSV: step, episode_return, total_loss, rl_loss, aux_loss,
// grad_norm, params_version.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void append(std::uint64_t step, double episode_return, const TrainMetrics& m);

 private:
  std::ofstream out_;
};

// Greedy or sampled episode under fixed parameters; returns the reward sum.
template <typename T>
double run_episode(const ParameterSet<T>& params, const AgentConfig& cfg, Environment& env, bool greedy,
                   std::mt19937_64& rng, std::size_t max_steps = 1000000);

}  // namespace mra::learner
