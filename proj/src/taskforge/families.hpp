// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "mra/taskforge/task.hpp"

namespace mra::taskforge::detail {

inline constexpr std::size_t kCodeBits = 8;

void write_code(Observation& obs, std::size_t offset, int id, std::uint64_t codebook_seed);

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

inline bool coin(std::mt19937_64& rng) { return (rng() >> 63) != 0; }

template <typename V>
void shuffle(std::vector<V>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

template <typename V>
const V& choose(const std::vector<V>& v, std::mt19937_64& rng) {
  return v[uniform_index(rng, v.size())];
}

// Heading 0 north, 1 east, 2 south, 3 west; y grows southward.
struct Pose {
  int x = 0;
  int y = 0;
  int heading = 0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

inline constexpr int kDx[4] = {0, 1, 0, -1};
inline constexpr int kDy[4] = {-1, 0, 1, 0};

// Cell the action tries to enter (the current cell for pure turns) and the
// heading afterwards.
Pose intended_pose(const Pose& p, int action);

// Shortest first action from `start` to any pose on `goal_x, goal_y` over
// cells where passable(x, y) holds; -1 when unreachable. The goal cell
// itself is always enterable. Also returns the path length through `steps`.
template <typename Passable>
int bfs_first_action(const Pose& start, int goal_x, int goal_y, int width, int height, Passable passable,
                     std::size_t* steps = nullptr);

std::unique_ptr<TaskInstance> make_psychlab(const TaskSpec& spec, const TaskOptions& opts);
std::unique_ptr<TaskInstance> make_spot_diff(const TaskSpec& spec, const TaskOptions& opts);
std::unique_ptr<TaskInstance> make_navigation(const TaskSpec& spec, const TaskOptions& opts);
std::unique_ptr<TaskInstance> make_transitive(const TaskSpec& spec, const TaskOptions& opts);

template <typename Passable>
int bfs_first_action(const Pose& start, int goal_x, int goal_y, int width, int height, Passable passable,
                     std::size_t* steps) {
  if (start.x == goal_x && start.y == goal_y) {
    if (steps) *steps = 0;
    return -1;
  }
  const std::size_t n = static_cast<std::size_t>(width * height * 4);
  auto index = [&](const Pose& p) {
    return static_cast<std::size_t>((p.y * width + p.x) * 4 + p.heading);
  };
  std::vector<int> first(n, -2);
  std::vector<std::size_t> dist(n, 0);
  std::vector<Pose> queue{start};
  first[index(start)] = -1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Pose cur = queue[head];
    for (int a = 0; a < 8; ++a) {
      Pose nxt = intended_pose(cur, a);
      const bool moved = nxt.x != cur.x || nxt.y != cur.y;
      if (moved) {
        const bool inside = nxt.x >= 0 && nxt.y >= 0 && nxt.x < width && nxt.y < height;
        const bool goal = inside && nxt.x == goal_x && nxt.y == goal_y;
        if (!inside || (!goal && !passable(nxt.x, nxt.y))) {
          nxt.x = cur.x;
          nxt.y = cur.y;
        }
      }
      const std::size_t k = index(nxt);
      if (first[k] != -2) continue;
      first[k] = first[index(cur)] == -1 ? a : first[index(cur)];
      dist[k] = dist[index(cur)] + 1;
      if (nxt.x == goal_x && nxt.y == goal_y) {
        if (steps) *steps = dist[k];
        return first[k];
      }
      queue.push_back(nxt);
    }
  }
  return -1;
}

}  // namespace mra::taskforge::detail
