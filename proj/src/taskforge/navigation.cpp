// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/common/errors.hpp"
#include "taskforge/catalog.hpp"
#include "taskforge/families.hpp"

namespace mra::taskforge::detail {
namespace {

// Every arena is drawn on a canvas sized for the largest level; cells
// outside the arena read as wall.
constexpr int kCanvas = 27;
constexpr std::size_t kChannels = 6;
constexpr std::size_t kWallCh = 0, kGoalCh = 1, kHeadingCh = 2;

class Navigation final : public TaskInstance {
 public:
  Navigation(TaskSpec spec, const TaskOptions& opts) : TaskInstance(std::move(spec), opts) {
    visible_ = spec_.family == Family::kVisibleGoalBuildings || spec_.family == Family::kVisibleGoalMaze;
    maze_ = spec_.family == Family::kVisibleGoalMaze;
    buildings_ = spec_.family == Family::kInvisibleGoalBuildings || spec_.family == Family::kVisibleGoalBuildings;
  }

  ObservationSpec observation_spec() const override { return ObservationSpec::grid(kCanvas, kCanvas, kChannels); }
  std::unique_ptr<TaskInstance> clone() const override { return std::make_unique<Navigation>(*this); }

  int oracle_action() const override {
    const int a = bfs_first_action(pose_, goal_x_, goal_y_, size_, size_,
                                   [&](int x, int y) { return !wall(x, y); });
    return a < 0 ? kTurnLeft : a;
  }

  double max_reward() const override {
    auto copy = std::make_unique<Navigation>(*this);
    double total = 0.0;
    while (copy->t_ < copy->length_) total += copy->advance(copy->oracle_action()).reward;
    return total;
  }

 protected:
  bool fixed_length() const override { return true; }

  Observation begin_episode() override {
    size_ = choose(spec_.scale_values, rng_);
    length_ = static_cast<std::size_t>(8 * size_);
    t_ = 0;
    build_walls();
    const int region = choose(spec_.stimulus_pool, rng_);
    std::vector<std::pair<int, int>> cells;
    for (int y = 0; y < size_; ++y) {
      for (int x = 0; x < size_; ++x) {
        if (!wall(x, y) && in_region(x, y, region) && (!maze_ || (x % 2 == 1 && y % 2 == 1))) cells.emplace_back(x, y);
      }
    }
    if (cells.empty()) throw ContractError("navigation: empty goal region");
    std::tie(goal_x_, goal_y_) = choose(cells, rng_);
    spawn_rng_.seed(rng_());
    respawn();
    return render();
  }

  StepResult advance(int action) override {
    StepResult r;
    const Pose np = intended_pose(pose_, action);
    if (!wall(np.x, np.y)) {
      pose_ = np;
    } else {
      pose_.heading = np.heading;
    }
    ++t_;
    if (pose_.x == goal_x_ && pose_.y == goal_y_) {
      r.reward = 1.0;
      r.info["trial_complete"] = 1;
      respawn();
    }
    r.done = t_ >= length_;
    if (!r.done) r.observation = render();
    return r;
  }

 private:
  bool wall(int x, int y) const {
    if (x < 0 || y < 0 || x >= size_ || y >= size_) return true;
    return walls_[static_cast<std::size_t>(y * size_ + x)] != 0;
  }

  bool in_region(int x, int y, int region) const {
    const bool north = y < size_ / 2, west = x < size_ / 2;
    switch (region) {
      case kRegionNW: return north && west;
      case kRegionNE: return north && !west;
      case kRegionSW: return !north && west;
      case kRegionSE: return !north && !west;
      case kRegionNorth: return north;
      case kRegionSouth: return !north;
      default: throw ContractError("navigation: unknown region");
    }
  }

  void build_walls() {
    walls_.assign(static_cast<std::size_t>(size_ * size_), 0);
    auto set = [&](int x, int y, int v) { walls_[static_cast<std::size_t>(y * size_ + x)] = static_cast<char>(v); };
    if (buildings_) {
      const int q = size_ / 4;
      for (auto [bx, by] : {std::pair{q, q}, {size_ - q - 2, q}, {q, size_ - q - 2}, {size_ - q - 2, size_ - q - 2}}) {
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) set(bx + dx, by + dy, 1);
        }
      }
    }
    if (maze_) {
      std::fill(walls_.begin(), walls_.end(), 1);
      std::vector<std::pair<int, int>> stack{{1, 1}};
      set(1, 1, 0);
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        std::vector<int> dirs;
        for (int d = 0; d < 4; ++d) {
          const int nx = cx + 2 * kDx[d], ny = cy + 2 * kDy[d];
          if (nx > 0 && ny > 0 && nx < size_ - 1 && ny < size_ - 1 && wall(nx, ny)) dirs.push_back(d);
        }
        if (dirs.empty()) {
          stack.pop_back();
          continue;
        }
        const int d = choose(dirs, rng_);
        set(cx + kDx[d], cy + kDy[d], 0);
        set(cx + 2 * kDx[d], cy + 2 * kDy[d], 0);
        stack.emplace_back(cx + 2 * kDx[d], cy + 2 * kDy[d]);
      }
    }
  }

  void respawn() {
    while (true) {
      const int x = static_cast<int>(spawn_rng_() % static_cast<std::uint64_t>(size_));
      const int y = static_cast<int>(spawn_rng_() % static_cast<std::uint64_t>(size_));
      const int h = static_cast<int>(spawn_rng_() % 4);
      if (!wall(x, y) && (x != goal_x_ || y != goal_y_)) {
        pose_ = {x, y, h};
        return;
      }
    }
  }

  Observation render() const {
    Observation o(static_cast<std::size_t>(kCanvas * kCanvas) * kChannels, 0.0f);
    for (int y = 0; y < kCanvas; ++y) {
      for (int x = 0; x < kCanvas; ++x) {
        const std::size_t base = static_cast<std::size_t>(y * kCanvas + x) * kChannels;
        if (wall(x, y)) o[base + kWallCh] = 1.0f;
      }
    }
    if (visible_) o[static_cast<std::size_t>(goal_y_ * kCanvas + goal_x_) * kChannels + kGoalCh] = 1.0f;
    o[static_cast<std::size_t>(pose_.y * kCanvas + pose_.x) * kChannels + kHeadingCh +
      static_cast<std::size_t>(pose_.heading)] = 1.0f;
    return o;
  }

  bool visible_ = false, maze_ = false, buildings_ = false;
  int size_ = 10;
  std::size_t length_ = 0;
  std::size_t t_ = 0;
  std::vector<char> walls_;
  int goal_x_ = 0, goal_y_ = 0;
  Pose pose_;
  std::mt19937_64 spawn_rng_;
};

}  // namespace

std::unique_ptr<TaskInstance> make_navigation(const TaskSpec& spec, const TaskOptions& opts) {
  if (!is_navigation(spec.family)) throw ContractError("make_navigation: not a navigation family");
  return std::make_unique<Navigation>(spec, opts);
}

}  // namespace mra::taskforge::detail
