// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <sstream>

#include "mra/common/errors.hpp"
#include "taskforge/catalog.hpp"
#include "taskforge/families.hpp"

namespace mra::taskforge::detail {
namespace {

constexpr int kView = 5;
constexpr std::size_t kChannels = 15;
constexpr std::size_t kWallCh = 0, kBlockCh = 1, kCodeCh = 2, kGateCh = 10, kHeadingCh = 11;

using Offsets = std::array<std::array<int, 2>, 8>;

// Eight-step offset loops inside a 3x3 zone, in catalog order.
const std::array<Offsets, 12>& motion_loops() {
  static const std::array<Offsets, 12> loops = {{
      {{{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}},      // circle
      {{{-1, -1}, {-1, -1}, {1, -1}, {1, -1}, {1, 1}, {1, 1}, {-1, 1}, {-1, 1}}},    // square
      {{{0, -1}, {1, 1}, {-1, 0}, {1, 0}, {-1, 1}, {0, -1}, {0, 0}, {0, 0}}},        // five-point star
      {{{-1, 0}, {-1, -1}, {1, -1}, {1, 0}, {1, 1}, {-1, 1}, {-1, 0}, {0, 0}}},      // hexagon
      {{{-1, 0}, {0, 0}, {1, 0}, {0, 0}, {-1, 0}, {0, 0}, {1, 0}, {0, 0}}},          // linear x
      {{{-1, -1}, {0, 0}, {1, 1}, {0, 0}, {-1, -1}, {0, 0}, {1, 1}, {0, 0}}},        // linear y = x
      {{{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}},            // no motion
      {{{0, -1}, {0, -1}, {1, 1}, {1, 1}, {1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}},       // triangle
      {{{0, -1}, {1, 0}, {1, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, 0}, {0, 0}}},        // pentagon
      {{{0, 0}, {1, -1}, {1, 1}, {0, 0}, {-1, -1}, {-1, 1}, {0, 0}, {0, 0}}},        // figure-eight
      {{{0, -1}, {0, 0}, {0, 1}, {0, 0}, {0, -1}, {0, 0}, {0, 1}, {0, 0}}},          // linear y
      {{{1, -1}, {0, 0}, {-1, 1}, {0, 0}, {1, -1}, {0, 0}, {-1, 1}, {0, 0}}},        // linear y = -x
  }};
  return loops;
}

struct Block {
  int lx = 0;  // room-local anchor (zone centre for moving blocks)
  int ly = 0;
  int stim1 = 0;
  int stim2 = 0;
};

class SpotDifference final : public TaskInstance {
 public:
  SpotDifference(TaskSpec spec, const TaskOptions& opts) : TaskInstance(std::move(spec), opts) {
    motion_ = spec_.family == Family::kSpotDiffMotion;
    passive_ = spec_.family == Family::kSpotDiffPassive;
    multi_ = spec_.family == Family::kSpotDiffMultiObject;
    room_ = motion_ ? 8 : (multi_ ? 6 : 5);
    width_ = 2 * room_ + 5;
    height_ = room_ + 2;
    yc_ = 1 + room_ / 2;
  }

  ObservationSpec observation_spec() const override { return ObservationSpec::grid(kView, kView, kChannels); }
  double max_reward() const override { return 1.0; }
  std::unique_ptr<TaskInstance> clone() const override { return std::make_unique<SpotDifference>(*this); }

  int oracle_action() const override {
    if (hold_ > 0) return kTurnLeft;
    if (motion_) {
      const int a = timed_first_action();
      return a < 0 ? kTurnLeft : a;
    }
    const auto [tx, ty] = block_cell(altered_, 2);
    auto passable = [&](int x, int y) { return cell_passable(x, y) && block_at(x, y, 2) < 0; };
    const int a = bfs_first_action(pose_, tx, ty, width_, height_, passable);
    return a < 0 ? kTurnLeft : a;
  }

  std::string choice_context() const override {
    if (!door_closed_) return {};
    std::ostringstream os;
    for (const Block& b : blocks_) os << b.lx << ',' << b.ly << ',' << b.stim2 << ';';
    return os.str();
  }
  int target_object() const override { return static_cast<int>(altered_); }

 protected:
  Observation begin_episode() override {
    const int count = multi_ ? choose(spec_.scale_values, rng_) : 2;
    const int n = opts_.tiny ? 2 : count;
    delay_ = multi_ ? 0 : choose(spec_.scale_values, rng_);
    place_blocks(static_cast<std::size_t>(n));
    for (Block& b : blocks_) {
      b.stim1 = choose(spec_.stimulus_pool, rng_);
      b.stim2 = b.stim1;
    }
    altered_ = uniform_index(rng_, blocks_.size());
    std::vector<int> others;
    for (int s : spec_.stimulus_pool) {
      if (s != blocks_[altered_].stim1) others.push_back(s);
    }
    blocks_[altered_].stim2 = choose(others, rng_);
    door_closed_ = false;
    hold_ = 0;
    tick_ = 0;
    std::vector<std::pair<int, int>> free;
    for (int ly = 0; ly < room_; ++ly) {
      for (int lx = 0; lx < room_ - 1; ++lx) {
        if (block_at(1 + lx, 1 + ly, 1) < 0) free.emplace_back(lx, ly);
      }
    }
    const auto [sx, sy] = opts_.tiny ? free.front() : choose(free, rng_);
    pose_ = {1 + sx, 1 + sy, static_cast<int>(uniform_index(rng_, 4))};
    return render();
  }

  StepResult advance(int action) override {
    StepResult r;
    if (hold_ > 0) {
      --hold_;
    } else {
      const Pose np = intended_pose(pose_, action);
      const bool moves = np.x != pose_.x || np.y != pose_.y;
      if (moves && room_of(np.x) == 2) {
        const int hit = block_at(np.x, np.y, 2);
        if (hit >= 0) {
          r.reward = static_cast<std::size_t>(hit) == altered_ ? 1.0 : 0.0;
          r.info["trial_complete"] = 1;
          r.done = true;
          return r;
        }
      }
      const bool entered = moves && cell_passable(np.x, np.y);
      if (!moves || entered) {
        pose_ = np;
      } else {
        pose_.heading = np.heading;
      }
      if (entered && pose_.x == gate_x() && pose_.y == yc_) hold_ = delay_;
      if (room_of(pose_.x) == 2) door_closed_ = true;
    }
    ++tick_;
    r.observation = render();
    return r;
  }

 private:
  int gate_x() const { return room_ + 2; }
  int room2_x0() const { return room_ + 4; }
  int room_of(int x) const { return x >= 1 && x <= room_ ? 1 : (x >= room2_x0() && x < room2_x0() + room_ ? 2 : 0); }

  std::pair<int, int> block_cell(std::size_t i, int room) const { return block_cell(i, room, tick_); }

  std::pair<int, int> block_cell(std::size_t i, int room, std::size_t tick) const {
    const Block& b = blocks_[i];
    int lx = b.lx, ly = b.ly;
    if (motion_) {
      const int stim = room == 1 ? b.stim1 : b.stim2;
      const auto& off = motion_loops()[static_cast<std::size_t>(catalog::motion_index(stim))][tick % 8];
      lx += off[0];
      ly += off[1];
    }
    return {(room == 1 ? 1 : room2_x0()) + lx, 1 + ly};
  }

  int block_at(int x, int y, int room) const { return block_at(x, y, room, tick_); }

  int block_at(int x, int y, int room, std::size_t tick) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (block_cell(i, room, tick) == std::make_pair(x, y)) return static_cast<int>(i);
    }
    return -1;
  }

  // Breadth-first search over (pose, tick mod 8) for moving blocks. Before
  // the gate the goal is the gate cell; afterwards it is stepping onto the
  // altered block.
  int timed_first_action() const {
    const bool to_gate = pose_.x < gate_x();
    const auto n = static_cast<std::size_t>(width_ * height_ * 4 * 8);
    auto index = [&](const Pose& p, std::size_t t) {
      return (static_cast<std::size_t>((p.y * width_ + p.x) * 4 + p.heading)) * 8 + t % 8;
    };
    struct Node {
      Pose pose;
      std::size_t tick;
    };
    std::vector<int> first(n, -2);
    std::vector<Node> queue{{pose_, tick_}};
    first[index(pose_, tick_)] = -1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Node cur = queue[head];
      const int via = first[index(cur.pose, cur.tick)];
      for (int a = 0; a < 8; ++a) {
        const int fa = via == -1 ? a : via;
        Pose np = intended_pose(cur.pose, a);
        const bool moves = np.x != cur.pose.x || np.y != cur.pose.y;
        if (moves && room_of(np.x) == 2) {
          const int hit = block_at(np.x, np.y, 2, cur.tick);
          if (hit >= 0) {
            if (!to_gate && static_cast<std::size_t>(hit) == altered_) return fa;
            continue;
          }
        }
        if (moves && to_gate && np.x == gate_x() && np.y == yc_) return fa;
        if (moves) {
          if (!to_gate && np.x == gate_x() && np.y == yc_) continue;
          const bool ok = !is_wall(np.x, np.y) && (room_of(np.x) != 1 || block_at(np.x, np.y, 1, cur.tick) < 0);
          if (!ok) {
            np.x = cur.pose.x;
            np.y = cur.pose.y;
          }
        }
        const std::size_t k = index(np, cur.tick + 1);
        if (first[k] != -2) continue;
        first[k] = fa;
        queue.push_back({np, cur.tick + 1});
      }
    }
    return -1;
  }

  bool in_corridor(int x, int y) const { return y == yc_ && x >= room_ + 1 && x <= room_ + 3; }

  bool is_wall(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return true;
    if (in_corridor(x, y)) return door_closed_ && x == room_ + 3;
    if (y < 1 || y > room_) return true;
    return room_of(x) == 0;
  }

  bool cell_passable(int x, int y) const {
    if (is_wall(x, y)) return false;
    return room_of(x) != 1 || block_at(x, y, 1) < 0;
  }

  // Free cells of a room stay 4-connected to its doorway and every block
  // touches a free cell.
  bool layout_ok() const {
    std::vector<int> grid(static_cast<std::size_t>(room_ * room_), 0);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      for (int t = 0; t < (motion_ ? 8 : 1); ++t) {
        const Block& b = blocks_[i];
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!motion_ && (dx || dy)) continue;
            grid[static_cast<std::size_t>((b.ly + dy) * room_ + b.lx + dx)] = 1;
          }
        }
      }
    }
    if (grid[static_cast<std::size_t>((room_ / 2) * room_)] || grid[static_cast<std::size_t>((room_ / 2) * room_ + room_ - 1)]) {
      return false;
    }
    std::vector<int> seen(grid.size(), 0);
    std::vector<int> stack{(room_ / 2) * room_};
    seen[static_cast<std::size_t>(stack.back())] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      ++reached;
      for (int d = 0; d < 4; ++d) {
        const int nx = c % room_ + kDx[d], ny = c / room_ + kDy[d];
        if (nx < 0 || ny < 0 || nx >= room_ || ny >= room_) continue;
        const auto k = static_cast<std::size_t>(ny * room_ + nx);
        if (grid[k] || seen[k]) continue;
        seen[k] = 1;
        stack.push_back(static_cast<int>(k));
      }
    }
    std::size_t free = 0;
    for (int g : grid) free += g == 0;
    if (reached != free) return false;
    for (const Block& b : blocks_) {
      bool touches = false;
      for (int d = 0; d < 4; ++d) {
        const int nx = b.lx + kDx[d], ny = b.ly + kDy[d];
        if (nx >= 0 && ny >= 0 && nx < room_ && ny < room_ && !grid[static_cast<std::size_t>(ny * room_ + nx)]) {
          touches = true;
        }
      }
      if (!touches) return false;
    }
    return true;
  }

  void place_blocks(std::size_t n) {
    blocks_.assign(n, Block{});
    if (motion_) {
      std::vector<std::pair<int, int>> zones = {{2, 1}, {5, 1}, {2, 5}, {5, 5}};
      if (!opts_.tiny) shuffle(zones, rng_);
      for (std::size_t i = 0; i < n; ++i) {
        blocks_[i].lx = zones[i].first;
        blocks_[i].ly = zones[i].second;
      }
      return;
    }
    if (passive_ || opts_.tiny) {
      const int c = room_ / 2;
      const std::vector<std::pair<int, int>> near = {{room_ - 1, c - 1}, {room_ - 1, c + 1}, {room_ - 2, c - 1},
                                                     {room_ - 2, c + 1}};
      for (std::size_t i = 0; i < n; ++i) {
        blocks_[i].lx = near[i].first;
        blocks_[i].ly = near[i].second;
      }
      return;
    }
    std::vector<std::pair<int, int>> cells;
    for (int ly = 0; ly < room_; ++ly) {
      for (int lx = 0; lx < room_; ++lx) cells.emplace_back(lx, ly);
    }
    do {
      shuffle(cells, rng_);
      for (std::size_t i = 0; i < n; ++i) {
        blocks_[i].lx = cells[i].first;
        blocks_[i].ly = cells[i].second;
      }
    } while (!layout_ok());
  }

  Observation render() const {
    Observation o(static_cast<std::size_t>(kView * kView) * kChannels, 0.0f);
    for (int vy = 0; vy < kView; ++vy) {
      for (int vx = 0; vx < kView; ++vx) {
        const int x = pose_.x + vx - kView / 2, y = pose_.y + vy - kView / 2;
        const std::size_t base = static_cast<std::size_t>(vy * kView + vx) * kChannels;
        if (is_wall(x, y)) {
          o[base + kWallCh] = 1.0f;
          continue;
        }
        if (x == gate_x() && y == yc_) o[base + kGateCh] = 1.0f;
        const int room = room_of(x);
        if (room == 0) continue;
        const int b = block_at(x, y, room);
        if (b < 0) continue;
        o[base + kBlockCh] = 1.0f;
        if (!motion_) {
          const Block& blk = blocks_[static_cast<std::size_t>(b)];
          write_code(o, base + kCodeCh, room == 1 ? blk.stim1 : blk.stim2, opts_.codebook_seed);
        }
      }
    }
    const std::size_t centre = static_cast<std::size_t>((kView / 2) * kView + kView / 2) * kChannels;
    o[centre + kHeadingCh + static_cast<std::size_t>(pose_.heading)] = 1.0f;
    return o;
  }

  bool motion_ = false, passive_ = false, multi_ = false;
  int room_ = 5, width_ = 0, height_ = 0, yc_ = 0;
  int delay_ = 0;
  int hold_ = 0;
  std::size_t tick_ = 0;
  std::vector<Block> blocks_;
  std::size_t altered_ = 0;
  bool door_closed_ = false;
  Pose pose_;
};

}  // namespace

std::unique_ptr<TaskInstance> make_spot_diff(const TaskSpec& spec, const TaskOptions& opts) {
  if (!is_spot_diff(spec.family)) throw ContractError("make_spot_diff: not a spot-the-difference family");
  return std::make_unique<SpotDifference>(spec, opts);
}

}  // namespace mra::taskforge::detail
