// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Run settings and their flat key=value file format:
//
//   # comment
//   [run]
//   family = avm
//   budget = 200000
//
// Keys live in sections ([run], [task], [controller], [memory], [learner],
// [cpc], [rec], [eval]). Unknown sections, unknown keys, duplicate keys and
// malformed values are ContractErrors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mra/harness/ablation.hpp"
#include "mra/learner/learner.hpp"
#include "mra/taskforge/task.hpp"

namespace mra::harness {

// Reference per-family hyper-parameters.
struct FamilyHypers {
  std::size_t hidden = 512;
  double baseline_cost = 0.5;
  double entropy_cost = 0.01;
  std::size_t batch_size = 16;
  std::size_t unroll = 50;
  double discount = 0.98;
  learner::OptimizerKind optimizer = learner::OptimizerKind::kAdam;
  double learning_rate = 1e-5;
  std::size_t cpc_steps = 10;
  double cpc_weight = 10.0;
  // Image reconstruction cost for REC.
  double rec_image_cost = 1.0;
};

FamilyHypers reference_hypers(taskforge::Family f);

struct RunSettings {
  // [run]
  taskforge::Family family = taskforge::Family::kArbitraryVisuomotorMapping;
  AblationConfig config;
  std::uint64_t seed = 0;
  // Environment frames consumed by training.
  std::uint64_t budget = 200000;
  // 0 runs actors and learner interleaved on one thread.
  std::size_t actor_threads = 0;
  std::uint64_t checkpoint_interval = 50000;

  // [task]
  taskforge::TaskOptions task;

  // [controller], [memory], [cpc], [rec]
  learner::AgentConfig agent;

  // [learner]
  learner::LearnerConfig learner;
  std::size_t batch_size = 4;
  std::size_t unroll = 20;

  // [eval]
  std::uint64_t eval_interval = 10000;
  std::size_t eval_episodes = 10;
  std::size_t baseline_episodes = 200;
  // 0 selects the family default.
  double ewma_alpha = 0.0;
  std::size_t window = 10;
};

// Reference hyper-parameters for the family scaled to desk size: smaller
// networks, batches and unrolls and a larger learning rate.
RunSettings desk_settings(taskforge::Family f, const AblationConfig& cfg, std::uint64_t seed);

// Applies the ablation to `s.agent` and fills observation/action sizes
// from the family.
void finalize_settings(RunSettings& s);

// Flat key -> value map keyed "section.key".
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
// Overrides fields of `s` from `kv`; unknown keys throw.
void apply_key_values(RunSettings& s, const KeyValues& kv);
// Every documented key with its current value.
KeyValues to_key_values(const RunSettings& s);
std::string format_settings(const RunSettings& s);
RunSettings load_settings(const std::filesystem::path& path);

// Documented keys with a one-line description, "section.key" -> text.
const std::vector<std::pair<std::string, std::string>>& settings_keys();

}  // namespace mra::harness
