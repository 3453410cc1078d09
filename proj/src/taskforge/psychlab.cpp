// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "mra/common/errors.hpp"
#include "taskforge/families.hpp"

namespace mra::taskforge::detail {
namespace {

// Each trial shows one stimulus; its direction is revealed only on the
// first showing. Any action closes the trial.
class Avm final : public TaskInstance {
 public:
  Avm(TaskSpec spec, const TaskOptions& opts) : TaskInstance(std::move(spec), opts) {}
  ObservationSpec observation_spec() const override { return ObservationSpec::vector(kCodeBits + 4); }
  int oracle_action() const override { return dirs_[seq_[trial_]]; }
  double max_reward() const override { return static_cast<double>(seq_.size()); }
  std::unique_ptr<TaskInstance> clone() const override { return std::make_unique<Avm>(*this); }

 protected:
  Observation begin_episode() override {
    const int n = choose(spec_.scale_values, rng_);
    std::vector<int> pool = spec_.stimulus_pool;
    shuffle(pool, rng_);
    const std::size_t s = std::min(pool.size(), static_cast<std::size_t>((n + 3) / 4));
    ids_.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
    dirs_.clear();
    for (std::size_t i = 0; i < s; ++i) dirs_.push_back(static_cast<int>(uniform_index(rng_, 4)));
    seq_.clear();
    for (std::size_t i = 0; i < s; ++i) seq_.push_back(i);
    while (seq_.size() < static_cast<std::size_t>(n)) seq_.push_back(uniform_index(rng_, s));
    shuffle(seq_, rng_);
    trial_ = 0;
    return render();
  }

  StepResult advance(int action) override {
    StepResult r;
    r.reward = action == oracle_action() ? 1.0 : 0.0;
    r.info["trial_complete"] = 1;
    ++trial_;
    r.done = trial_ == seq_.size();
    if (!r.done) r.observation = render();
    return r;
  }

 private:
  Observation render() const {
    Observation o(kCodeBits + 4, 0.0f);
    const std::size_t s = seq_[trial_];
    write_code(o, 0, ids_[s], opts_.codebook_seed);
    const bool first = std::find(seq_.begin(), seq_.begin() + static_cast<std::ptrdiff_t>(trial_), s) ==
                       seq_.begin() + static_cast<std::ptrdiff_t>(trial_);
    if (first) o[kCodeBits + static_cast<std::size_t>(dirs_[s])] = 1.0f;
    return o;
  }

  std::vector<int> ids_;
  std::vector<int> dirs_;
  std::vector<std::size_t> seq_;
  std::size_t trial_ = 0;
};

// Per trial: answer look-left for a stimulus already shown this episode,
// look-right for a new one. Other actions wait.
class ContinuousRecognition final : public TaskInstance {
 public:
  ContinuousRecognition(TaskSpec spec, const TaskOptions& opts) : TaskInstance(std::move(spec), opts) {}
  ObservationSpec observation_spec() const override { return ObservationSpec::vector(kCodeBits + 1); }
  int oracle_action() const override { return seen_[trial_] ? kLookLeft : kLookRight; }
  double max_reward() const override { return static_cast<double>(ids_.size()); }
  std::unique_ptr<TaskInstance> clone() const override { return std::make_unique<ContinuousRecognition>(*this); }

 protected:
  Observation begin_episode() override {
    const int n = choose(spec_.scale_values, rng_);
    std::vector<int> fresh = spec_.stimulus_pool;
    shuffle(fresh, rng_);
    std::vector<int> shown;
    ids_.clear();
    seen_.clear();
    for (int t = 0; t < n; ++t) {
      const bool repeat = !shown.empty() && (fresh.empty() || coin(rng_));
      if (repeat) {
        ids_.push_back(choose(shown, rng_));
        seen_.push_back(true);
      } else {
        ids_.push_back(fresh.back());
        fresh.pop_back();
        shown.push_back(ids_.back());
        seen_.push_back(false);
      }
    }
    trial_ = 0;
    return render();
  }

  StepResult advance(int action) override {
    StepResult r;
    if (action == kLookLeft || action == kLookRight) {
      r.reward = action == oracle_action() ? 1.0 : 0.0;
      r.info["trial_complete"] = 1;
      ++trial_;
    }
    r.done = trial_ == ids_.size();
    if (!r.done) r.observation = render();
    return r;
  }

 private:
  Observation render() const {
    Observation o(kCodeBits + 1, 0.0f);
    write_code(o, 0, ids_[trial_], opts_.codebook_seed);
    o[kCodeBits] = 1.0f;
    return o;
  }

  std::vector<int> ids_;
  std::vector<bool> seen_;
  std::size_t trial_ = 0;
};

// Study pattern, blank delay, test pattern. Look right if the patterns
// differ, look left if not; other actions wait at the test screen.
class ChangeDetection final : public TaskInstance {
 public:
  ChangeDetection(TaskSpec spec, const TaskOptions& opts)
      : TaskInstance(std::move(spec), opts), cells_(opts.tiny ? 1 : 4), trials_(opts.tiny ? 1 : 3) {}
  ObservationSpec observation_spec() const override { return ObservationSpec::vector(cells_ * kCodeBits + 3); }
  int oracle_action() const override {
    if (phase_ != Phase::kTest) return kNoop;
    return study_ == test_ ? kLookLeft : kLookRight;
  }
  double max_reward() const override { return static_cast<double>(trials_); }
  std::unique_ptr<TaskInstance> clone() const override { return std::make_unique<ChangeDetection>(*this); }

 protected:
  Observation begin_episode() override {
    trial_ = 0;
    start_trial();
    return render();
  }

  StepResult advance(int action) override {
    StepResult r;
    switch (phase_) {
      case Phase::kStudy:
        phase_ = delay_ > 0 ? Phase::kDelay : Phase::kTest;
        remaining_ = delay_;
        break;
      case Phase::kDelay:
        if (--remaining_ == 0) phase_ = Phase::kTest;
        break;
      case Phase::kTest:
        if (action == kLookLeft || action == kLookRight) {
          r.reward = action == oracle_action() ? 1.0 : 0.0;
          r.info["trial_complete"] = 1;
          if (++trial_ == trials_) {
            r.done = true;
            return r;
          }
          start_trial();
        }
        break;
    }
    r.observation = render();
    return r;
  }

 private:
  enum class Phase { kStudy, kDelay, kTest };

  void start_trial() {
    delay_ = static_cast<std::size_t>(choose(spec_.scale_values, rng_));
    study_.clear();
    for (std::size_t i = 0; i < cells_; ++i) study_.push_back(choose(spec_.stimulus_pool, rng_));
    test_ = study_;
    if (coin(rng_)) {
      const std::size_t j = uniform_index(rng_, cells_);
      std::vector<int> others;
      for (int c : spec_.stimulus_pool) {
        if (c != study_[j]) others.push_back(c);
      }
      test_[j] = choose(others, rng_);
    }
    phase_ = Phase::kStudy;
  }

  Observation render() const {
    Observation o(cells_ * kCodeBits + 3, 0.0f);
    if (phase_ != Phase::kDelay) {
      const auto& pattern = phase_ == Phase::kStudy ? study_ : test_;
      for (std::size_t i = 0; i < cells_; ++i) write_code(o, i * kCodeBits, pattern[i], opts_.codebook_seed);
    }
    o[cells_ * kCodeBits + static_cast<std::size_t>(phase_)] = 1.0f;
    return o;
  }

  std::size_t cells_;
  std::size_t trials_;
  std::size_t trial_ = 0;
  std::size_t delay_ = 0;
  std::size_t remaining_ = 0;
  Phase phase_ = Phase::kStudy;
  std::vector<int> study_;
  std::vector<int> test_;
};

// What screen (one digit), where screen (four digits at left/right/up/down),
// blank delay, then a query answered by looking toward the first digit's
// location. Other actions wait at the query.
class WhatThenWhere final : public TaskInstance {
 public:
  WhatThenWhere(TaskSpec spec, const TaskOptions& opts)
      : TaskInstance(std::move(spec), opts), trials_(opts.tiny ? 1 : 2) {}
  ObservationSpec observation_spec() const override { return ObservationSpec::vector(5 * kCodeBits + 4); }
  int oracle_action() const override { return phase_ == Phase::kQuery ? answer_ : kNoop; }
  double max_reward() const override { return static_cast<double>(trials_); }
  std::unique_ptr<TaskInstance> clone() const override { return std::make_unique<WhatThenWhere>(*this); }

 protected:
  Observation begin_episode() override {
    trial_ = 0;
    start_trial();
    return render();
  }

  StepResult advance(int action) override {
    StepResult r;
    switch (phase_) {
      case Phase::kWhat:
        phase_ = Phase::kWhere;
        break;
      case Phase::kWhere:
        phase_ = delay_ > 0 ? Phase::kDelay : Phase::kQuery;
        remaining_ = delay_;
        break;
      case Phase::kDelay:
        if (--remaining_ == 0) phase_ = Phase::kQuery;
        break;
      case Phase::kQuery:
        if (action >= kLookLeft && action <= kLookDown) {
          r.reward = action == answer_ ? 1.0 : 0.0;
          r.info["trial_complete"] = 1;
          if (++trial_ == trials_) {
            r.done = true;
            return r;
          }
          start_trial();
        }
        break;
    }
    r.observation = render();
    return r;
  }

 private:
  enum class Phase { kWhat, kWhere, kDelay, kQuery };

  void start_trial() {
    delay_ = static_cast<std::size_t>(choose(spec_.scale_values, rng_));
    std::vector<int> pool = spec_.stimulus_pool;
    shuffle(pool, rng_);
    const std::size_t shown = std::min<std::size_t>(4, pool.size());
    layout_.assign(4, -1);
    std::vector<int> slots = {0, 1, 2, 3};
    shuffle(slots, rng_);
    for (std::size_t i = 0; i < shown; ++i) layout_[static_cast<std::size_t>(slots[i])] = pool[i];
    answer_ = slots[0];
    challenge_ = pool[0];
    phase_ = Phase::kWhat;
  }

  Observation render() const {
    Observation o(5 * kCodeBits + 4, 0.0f);
    if (phase_ == Phase::kWhat) write_code(o, 4 * kCodeBits, challenge_, opts_.codebook_seed);
    if (phase_ == Phase::kWhere) {
      for (std::size_t i = 0; i < 4; ++i) {
        if (layout_[i] >= 0) write_code(o, i * kCodeBits, layout_[i], opts_.codebook_seed);
      }
    }
    o[5 * kCodeBits + static_cast<std::size_t>(phase_)] = 1.0f;
    return o;
  }

  std::size_t trials_;
  std::size_t trial_ = 0;
  std::size_t delay_ = 0;
  std::size_t remaining_ = 0;
  Phase phase_ = Phase::kWhat;
  std::vector<int> layout_;
  int challenge_ = 0;
  int answer_ = 0;
};

}  // namespace

std::unique_ptr<TaskInstance> make_psychlab(const TaskSpec& spec, const TaskOptions& opts) {
  switch (spec.family) {
    case Family::kArbitraryVisuomotorMapping: return std::make_unique<Avm>(spec, opts);
    case Family::kContinuousRecognition: return std::make_unique<ContinuousRecognition>(spec, opts);
    case Family::kChangeDetection: return std::make_unique<ChangeDetection>(spec, opts);
    case Family::kWhatThenWhere: return std::make_unique<WhatThenWhere>(spec, opts);
    default: throw ContractError("make_psychlab: not a PsychLab family");
  }
}

}  // namespace mra::taskforge::detail
