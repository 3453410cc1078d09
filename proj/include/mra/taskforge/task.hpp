// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Symbolic and grid-world analogs of the 13 memory task families, each at
// four levels. Training levels draw stimuli from the training pool, holdout
// levels from the disjoint holdout pool.
//
// PsychLab analogs use 5 actions: look left, look right, look up, look down,
// noop. The other families use 8: forward, backward, strafe left, strafe
// right, turn left, turn right, forward + turn left, forward + turn right.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mra/common/environment.hpp"

namespace mra::taskforge {

enum class Family {
  kArbitraryVisuomotorMapping,
  kContinuousRecognition,
  kChangeDetection,
  kWhatThenWhere,
  kSpotDiffBasic,
  kSpotDiffPassive,
  kSpotDiffMultiObject,
  kSpotDiffMotion,
  kInvisibleGoalEmptyArena,
  kInvisibleGoalBuildings,
  kVisibleGoalBuildings,
  kVisibleGoalMaze,
  kTransitiveInference,
};

enum class Level { kTrainSmall, kTrainLarge, kHoldoutInterpolate, kHoldoutExtrapolate };

const std::vector<Family>& all_families();
const std::vector<Level>& all_levels();
std::string family_name(Family f);
std::string level_name(Level l);
// Throws ContractError for unknown names.
Family parse_family(const std::string& name);
Level parse_level(const std::string& name);

bool is_holdout(Level l);
bool is_psychlab(Family f);
bool is_spot_diff(Family f);
bool is_navigation(Family f);
std::size_t num_actions(Family f);
// Smoothing constant for score curves.
double ewma_alpha(Family f);

// PsychLab actions.
inline constexpr int kLookLeft = 0, kLookRight = 1, kLookUp = 2, kLookDown = 3, kNoop = 4;
// Grid actions.
inline constexpr int kForward = 0, kBackward = 1, kStrafeLeft = 2, kStrafeRight = 3, kTurnLeft = 4,
                     kTurnRight = 5, kForwardTurnLeft = 6, kForwardTurnRight = 7;

struct TaskOptions {
  // Replaces the trial count of trial-count families; holdout levels keep
  // the table's ratio to the training count.
  int trials_override = 0;
  // Two-item stimulus pools and fixed object placement, small enough for
  // exhaustive memoryless-policy analysis.
  bool tiny = false;
  std::uint64_t codebook_seed = 0x5eedc0de;
  double step_cap_factor = 10.0;
};

struct TaskSpec {
  Family family;
  Level level;
  std::uint64_t seed = 0;
  std::string scale_name;
  // Values the scale parameter may take at this level.
  std::vector<int> scale_values;
  std::string stimulus_name;
  // Catalog ids of the usable stimuli.
  std::vector<int> stimulus_pool;
};

// Pure table lookup.
TaskSpec task_spec(Family f, Level l, std::uint64_t seed = 0, const TaskOptions& opts = {});

// Human-readable labels of the spec's stimulus pool.
std::vector<std::string> stimulus_labels(const TaskSpec& spec);

// 8-bit code of a catalog stimulus under a codebook; injective and nonzero.
std::uint8_t stimulus_code(int id, std::uint64_t codebook_seed);

class TaskInstance : public Environment {
 public:
  const TaskSpec& spec() const { return spec_; }
  std::size_t num_actions() const override { return taskforge::num_actions(spec_.family); }

  Observation reset() final;
  StepResult step(int action) final;

  // Action of the scripted policy that sees the hidden state.
  virtual int oracle_action() const = 0;
  // Best achievable reward of the current episode.
  virtual double max_reward() const = 0;
  virtual std::unique_ptr<TaskInstance> clone() const = 0;
  // Key of the current room-2 layout for spot-the-difference families;
  // empty elsewhere.
  virtual std::string choice_context() const { return {}; }
  // Index of the rewarded object in the current choice, or -1.
  virtual int target_object() const { return -1; }

  std::uint64_t episode_index() const { return episode_; }
  std::size_t episode_steps() const { return steps_; }
  std::size_t step_cap() const { return step_cap_; }
  bool done() const { return done_; }
  const Observation& observation() const { return obs_; }

 protected:
  TaskInstance(TaskSpec spec, const TaskOptions& opts);
  TaskInstance(const TaskInstance&) = default;

  virtual Observation begin_episode() = 0;
  virtual StepResult advance(int action) = 0;
  // Episode length is fixed by the family; no cap applies.
  virtual bool fixed_length() const { return false; }

  TaskSpec spec_;
  TaskOptions opts_;
  std::mt19937_64 rng_;

 private:
  friend std::unique_ptr<TaskInstance> make_task(Family, Level, std::uint64_t, const TaskOptions&);
  void calibrate_cap();

  Observation obs_;
  std::uint64_t episode_ = 0;
  std::size_t steps_ = 0;
  std::size_t step_cap_ = 0;
  bool done_ = true;
};

// Throws ContractError for an unknown family.
std::unique_ptr<TaskInstance> make_task(Family f, Level l, std::uint64_t seed, const TaskOptions& opts = {});

// Samples TrainSmall or TrainLarge uniformly for every episode.
class TrainingMixture : public Environment {
 public:
  TrainingMixture(Family f, std::uint64_t seed, const TaskOptions& opts = {});
  ObservationSpec observation_spec() const override { return small_->observation_spec(); }
  std::size_t num_actions() const override { return small_->num_actions(); }
  Observation reset() override;
  StepResult step(int action) override;
  TaskInstance& current() { return *current_; }

 private:
  std::unique_ptr<TaskInstance> small_;
  std::unique_ptr<TaskInstance> large_;
  TaskInstance* current_;
  std::mt19937_64 rng_;
};

struct EpisodeStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t episodes = 0;
};

EpisodeStats oracle_reward(TaskInstance& task, std::size_t episodes);
EpisodeStats random_reward(TaskInstance& task, std::size_t episodes, std::uint64_t seed);
// Mean per-episode analytic maximum over the same episodes the oracle sees.
double mean_max_reward(const TaskInstance& task, std::size_t episodes);

// Mean reward of the best policy that maps the current observation alone to
// an action, computed by one-step lookahead along oracle trajectories and
// pooling over identical observations (or identical room-2 layouts for
// spot-the-difference families). Returns {memoryless, oracle}.
std::pair<double, double> memoryless_bound(const TaskInstance& task, std::size_t episodes);

// One row per completed trial of an oracle-played episode.
struct TrialRecord {
  std::uint64_t episode = 0;
  std::size_t trial = 0;
  std::size_t steps = 0;  // time-to-goal for navigation families
  double reward = 0.0;
};
std::vector<TrialRecord> play_oracle(TaskInstance& task, std::size_t episodes);

}  // namespace mra::taskforge
