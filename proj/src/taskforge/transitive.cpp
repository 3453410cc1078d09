// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/common/errors.hpp"
#include "taskforge/families.hpp"

namespace mra::taskforge::detail {
namespace {

// A chain of L items with increasing value. The demo phase shows the L-1
// adjacent pairs in scrambled order and orientation; choosing the higher
// item (strafe left for the left item, strafe right for the right item)
// advances, a wrong choice repeats the pair. The challenge pair is the
// second item against the second-to-last; only it is rewarded.
class TransitiveInference final : public TaskInstance {
 public:
  TransitiveInference(TaskSpec spec, const TaskOptions& opts) : TaskInstance(std::move(spec), opts) {}

  ObservationSpec observation_spec() const override { return ObservationSpec::vector(2 * kCodeBits + 2); }
  double max_reward() const override { return 1.0; }
  std::unique_ptr<TaskInstance> clone() const override { return std::make_unique<TransitiveInference>(*this); }
  int oracle_action() const override {
    const auto& [l, r] = pairs_[index_];
    return l > r ? kStrafeLeft : kStrafeRight;
  }

 protected:
  Observation begin_episode() override {
    const int len = choose(spec_.scale_values, rng_);
    if (static_cast<std::size_t>(len) > spec_.stimulus_pool.size() && !opts_.tiny) {
      throw ContractError("transitive inference: chain longer than the stimulus pool");
    }
    std::vector<int> pool = spec_.stimulus_pool;
    shuffle(pool, rng_);
    chain_.clear();
    for (int i = 0; i < len; ++i) chain_.push_back(pool[static_cast<std::size_t>(i) % pool.size()]);
    pairs_.clear();
    for (int i = 0; i + 1 < len; ++i) pairs_.emplace_back(i, i + 1);
    shuffle(pairs_, rng_);
    pairs_.emplace_back(1, len - 2);
    for (auto& p : pairs_) {
      if (coin(rng_)) std::swap(p.first, p.second);
    }
    index_ = 0;
    return render();
  }

  StepResult advance(int action) override {
    StepResult r;
    if (action != kStrafeLeft && action != kStrafeRight) {
      r.observation = render();
      return r;
    }
    const bool correct = action == oracle_action();
    const bool challenge = index_ + 1 == pairs_.size();
    if (challenge) {
      r.reward = correct ? 1.0 : 0.0;
      r.info["trial_complete"] = 1;
      r.done = true;
      return r;
    }
    if (correct) {
      ++index_;
      r.info["trial_complete"] = 1;
    }
    r.observation = render();
    return r;
  }

 private:
  Observation render() const {
    Observation o(2 * kCodeBits + 2, 0.0f);
    const auto& [l, r] = pairs_[index_];
    write_code(o, 0, chain_[static_cast<std::size_t>(l)], opts_.codebook_seed);
    write_code(o, kCodeBits, chain_[static_cast<std::size_t>(r)], opts_.codebook_seed);
    o[2 * kCodeBits + (index_ + 1 == pairs_.size() ? 1 : 0)] = 1.0f;
    return o;
  }

  std::vector<int> chain_;
  std::vector<std::pair<int, int>> pairs_;
  std::size_t index_ = 0;
};

}  // namespace

std::unique_ptr<TaskInstance> make_transitive(const TaskSpec& spec, const TaskOptions& opts) {
  if (spec.family != Family::kTransitiveInference) throw ContractError("make_transitive: wrong family");
  return std::make_unique<TransitiveInference>(spec, opts);
}

}  // namespace mra::taskforge::detail
