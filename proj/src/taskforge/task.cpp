// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/taskforge/task.hpp"

#include <cmath>
#include <map>

#include "mra/common/errors.hpp"
#include "taskforge/families.hpp"

namespace mra::taskforge {

namespace detail {

void write_code(Observation& obs, std::size_t offset, int id, std::uint64_t codebook_seed) {
  const std::uint8_t code = stimulus_code(id, codebook_seed);
  for (std::size_t b = 0; b < kCodeBits; ++b) obs[offset + b] = (code >> b) & 1u ? 1.0f : 0.0f;
}

Pose intended_pose(const Pose& p, int action) {
  Pose n = p;
  auto move = [&](int dir) {
    n.x += kDx[dir];
    n.y += kDy[dir];
  };
  switch (action) {
    case kForward: move(p.heading); break;
    case kBackward: move((p.heading + 2) % 4); break;
    case kStrafeLeft: move((p.heading + 3) % 4); break;
    case kStrafeRight: move((p.heading + 1) % 4); break;
    case kTurnLeft: n.heading = (p.heading + 3) % 4; break;
    case kTurnRight: n.heading = (p.heading + 1) % 4; break;
    case kForwardTurnLeft:
      move(p.heading);
      n.heading = (p.heading + 3) % 4;
      break;
    case kForwardTurnRight:
      move(p.heading);
      n.heading = (p.heading + 1) % 4;
      break;
    default: throw ContractError("grid action out of range: " + std::to_string(action));
  }
  return n;
}

}  // namespace detail

namespace {

std::mt19937_64 seeded(std::uint64_t seed, Family f, Level l) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(l)};
  return std::mt19937_64(seq);
}

EpisodeStats summarize(const std::vector<double>& xs) {
  EpisodeStats s;
  s.episodes = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

}  // namespace

TaskInstance::TaskInstance(TaskSpec spec, const TaskOptions& opts)
    : spec_(std::move(spec)), opts_(opts), rng_(seeded(spec_.seed, spec_.family, spec_.level)) {}

Observation TaskInstance::reset() {
  ++episode_;
  steps_ = 0;
  done_ = false;
  obs_ = begin_episode();
  return obs_;
}

StepResult TaskInstance::step(int action) {
  if (done_) throw ContractError("TaskInstance::step: episode is finished; call reset()");
  if (action < 0 || static_cast<std::size_t>(action) >= num_actions()) {
    throw ContractError("TaskInstance::step: action " + std::to_string(action) + " out of range for " +
                        family_name(spec_.family));
  }
  StepResult r = advance(action);
  ++steps_;
  if (!r.done && !fixed_length() && step_cap_ > 0 && steps_ >= step_cap_) {
    r.done = true;
    r.info["truncated"] = 1;
  }
  done_ = r.done;
  if (r.done && r.observation.empty()) r.observation = Observation(observation_spec().flat_size(), 0.0f);
  obs_ = r.observation;
  return r;
}

void TaskInstance::calibrate_cap() {
  if (fixed_length()) return;
  auto probe = clone();
  std::size_t longest = 1;
  for (int e = 0; e < 5; ++e) {
    probe->reset();
    std::size_t n = 0;
    while (!probe->done()) {
      probe->step(probe->oracle_action());
      if (++n > 1000000) throw ContractError("calibrate_cap: oracle does not terminate");
    }
    longest = std::max(longest, n);
  }
  step_cap_ = static_cast<std::size_t>(std::ceil(opts_.step_cap_factor * static_cast<double>(longest)));
}

std::unique_ptr<TaskInstance> make_task(Family f, Level l, std::uint64_t seed, const TaskOptions& opts) {
  TaskSpec spec = task_spec(f, l, seed, opts);
  std::unique_ptr<TaskInstance> t;
  if (is_psychlab(f)) {
    t = detail::make_psychlab(spec, opts);
  } else if (is_spot_diff(f)) {
    t = detail::make_spot_diff(spec, opts);
  } else if (is_navigation(f)) {
    t = detail::make_navigation(spec, opts);
  } else if (f == Family::kTransitiveInference) {
    t = detail::make_transitive(spec, opts);
  } else {
    throw ContractError("make_task: unknown family");
  }
  t->calibrate_cap();
  return t;
}

TrainingMixture::TrainingMixture(Family f, std::uint64_t seed, const TaskOptions& opts)
    : small_(make_task(f, Level::kTrainSmall, seed, opts)),
      large_(make_task(f, Level::kTrainLarge, seed, opts)),
      current_(small_.get()),
      rng_(seed ^ 0x9e3779b97f4a7c15ull) {}

Observation TrainingMixture::reset() {
  current_ = detail::coin(rng_) ? large_.get() : small_.get();
  return current_->reset();
}

StepResult TrainingMixture::step(int action) { return current_->step(action); }

EpisodeStats oracle_reward(TaskInstance& task, std::size_t episodes) {
  std::vector<double> totals;
  for (std::size_t e = 0; e < episodes; ++e) {
    task.reset();
    double total = 0.0;
    while (!task.done()) total += task.step(task.oracle_action()).reward;
    totals.push_back(total);
  }
  return summarize(totals);
}

EpisodeStats random_reward(TaskInstance& task, std::size_t episodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> totals;
  for (std::size_t e = 0; e < episodes; ++e) {
    task.reset();
    double total = 0.0;
    while (!task.done()) total += task.step(static_cast<int>(rng() % task.num_actions())).reward;
    totals.push_back(total);
  }
  return summarize(totals);
}

double mean_max_reward(const TaskInstance& task, std::size_t episodes) {
  auto t = task.clone();
  double sum = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    t->reset();
    sum += t->max_reward();
    while (!t->done()) t->step(t->oracle_action());
  }
  return sum / static_cast<double>(episodes);
}

std::pair<double, double> memoryless_bound(const TaskInstance& task, std::size_t episodes) {
  auto t = task.clone();
  const bool by_layout = is_spot_diff(task.spec().family);
  std::map<std::string, std::vector<double>> table;
  double oracle_total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    t->reset();
    bool recorded = false;
    while (!t->done()) {
      if (by_layout) {
        const std::string ctx = t->choice_context();
        if (!ctx.empty() && !recorded) {
          auto& row = table[ctx];
          const auto target = static_cast<std::size_t>(t->target_object());
          if (row.size() <= target) row.resize(target + 1, 0.0);
          row[target] += 1.0;
          recorded = true;
        }
      } else {
        const Observation& o = t->observation();
        std::string key(reinterpret_cast<const char*>(o.data()), o.size() * sizeof(float));
        auto& row = table[key];
        row.resize(t->num_actions(), 0.0);
        for (std::size_t a = 0; a < t->num_actions(); ++a) {
          auto probe = t->clone();
          row[a] += probe->step(static_cast<int>(a)).reward;
        }
      }
      oracle_total += t->step(t->oracle_action()).reward;
    }
  }
  double best = 0.0;
  for (const auto& [_, row] : table) {
    double m = 0.0;
    for (double v : row) m = std::max(m, v);
    best += m;
  }
  const double n = static_cast<double>(episodes);
  return {best / n, oracle_total / n};
}

std::vector<TrialRecord> play_oracle(TaskInstance& task, std::size_t episodes) {
  std::vector<TrialRecord> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    task.reset();
    std::size_t trial = 0, since = 0;
    while (!task.done()) {
      StepResult r = task.step(task.oracle_action());
      ++since;
      if (r.info.count("trial_complete")) {
        out.push_back({task.episode_index(), trial++, since, r.reward});
        since = 0;
      }
    }
  }
  return out;
}

}  // namespace mra::taskforge
