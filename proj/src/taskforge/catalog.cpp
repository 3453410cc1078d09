// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "mra/common/errors.hpp"
#include "mra/taskforge/task.hpp"
#include "taskforge/catalog.hpp"

namespace mra::taskforge {

namespace {

const std::vector<std::string>& color_names() {
  static const std::vector<std::string> names = {
      "Amethyst", "Caramel", "Honeydew", "Jade",   "Mallow", "Yellow",  "Lime",    "Pink",    "Sky",
      "Violet",   "Red",     "Green",    "Blue",   "White",  "Slate",   "Brown",   "Orange",  "Purple",
      "Black",    "Grey",    "Tan",      "Magenta", "Mint",  "Navy",    "Olive",   "Teal",    "Turquoise"};
  return names;
}

const std::vector<std::string>& motion_names() {
  static const std::vector<std::string> names = {
      "Circle",        "Square",   "Five-point star", "Hexagon",      "Linear X",  "Linear Y=X",
      "No motion",     "Triangle", "Pentagon",        "Figure-eight", "Linear Y",  "Linear Y=-X"};
  return names;
}

std::vector<int> colors(std::initializer_list<const char*> names) {
  std::vector<int> out;
  for (const char* n : names) out.push_back(catalog::color(n));
  return out;
}

std::vector<int> range_ids(int first, int count, int stride = 1) {
  std::vector<int> out;
  for (int i = 0; i < count; ++i) out.push_back(first + i * stride);
  return out;
}

int scaled(int trials, int table_value) {
  return static_cast<int>(std::lround(static_cast<double>(trials) * table_value / 50.0));
}

}  // namespace

namespace catalog {

int color(const std::string& name) {
  const auto& names = color_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ContractError("unknown color '" + name + "'");
  return kFirstColor + static_cast<int>(it - names.begin());
}

int digit(int d) { return kFirstDigit + d; }

int motion(int index) { return kFirstMotion + index; }

int motion_index(int id) { return id - kFirstMotion; }

std::string label(int id) {
  if (id >= 0 && id < kNumImages) return "image" + std::to_string(id);
  if (id >= kFirstColor && id < kFirstDigit) return color_names()[static_cast<std::size_t>(id - kFirstColor)];
  if (id >= kFirstDigit && id < kFirstMotion) return "digit" + std::to_string(id - kFirstDigit);
  if (id >= kFirstMotion && id < kCatalogSize) return motion_names()[static_cast<std::size_t>(id - kFirstMotion)];
  throw ContractError("unknown stimulus id " + std::to_string(id));
}

}  // namespace catalog

std::uint8_t stimulus_code(int id, std::uint64_t codebook_seed) {
  if (id < 0 || id >= catalog::kCatalogSize) throw ContractError("stimulus_code: id out of range");
  static std::mutex mu;
  static std::map<std::uint64_t, std::array<std::uint8_t, 255>> books;
  std::lock_guard<std::mutex> lock(mu);
  auto it = books.find(codebook_seed);
  if (it == books.end()) {
    std::array<std::uint8_t, 255> book{};
    std::iota(book.begin(), book.end(), std::uint8_t{1});
    std::mt19937_64 rng(codebook_seed);
    for (std::size_t i = book.size() - 1; i > 0; --i) {
      std::swap(book[i], book[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    it = books.emplace(codebook_seed, book).first;
  }
  return it->second[static_cast<std::size_t>(id)];
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> f = {
      Family::kArbitraryVisuomotorMapping, Family::kContinuousRecognition, Family::kChangeDetection,
      Family::kWhatThenWhere,              Family::kSpotDiffBasic,         Family::kSpotDiffPassive,
      Family::kSpotDiffMultiObject,        Family::kSpotDiffMotion,        Family::kInvisibleGoalEmptyArena,
      Family::kInvisibleGoalBuildings,     Family::kVisibleGoalBuildings,  Family::kVisibleGoalMaze,
      Family::kTransitiveInference};
  return f;
}

const std::vector<Level>& all_levels() {
  static const std::vector<Level> l = {Level::kTrainSmall, Level::kTrainLarge, Level::kHoldoutInterpolate,
                                       Level::kHoldoutExtrapolate};
  return l;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::kArbitraryVisuomotorMapping: return "avm";
    case Family::kContinuousRecognition: return "continuous_recognition";
    case Family::kChangeDetection: return "change_detection";
    case Family::kWhatThenWhere: return "what_then_where";
    case Family::kSpotDiffBasic: return "spot_diff_basic";
    case Family::kSpotDiffPassive: return "spot_diff_passive";
    case Family::kSpotDiffMultiObject: return "spot_diff_multi_object";
    case Family::kSpotDiffMotion: return "spot_diff_motion";
    case Family::kInvisibleGoalEmptyArena: return "invisible_goal_empty_arena";
    case Family::kInvisibleGoalBuildings: return "invisible_goal_buildings";
    case Family::kVisibleGoalBuildings: return "visible_goal_buildings";
    case Family::kVisibleGoalMaze: return "visible_goal_maze";
    case Family::kTransitiveInference: return "transitive_inference";
  }
  throw ContractError("unknown family");
}

std::string level_name(Level l) {
  switch (l) {
    case Level::kTrainSmall: return "train_small";
    case Level::kTrainLarge: return "train_large";
    case Level::kHoldoutInterpolate: return "holdout_interpolate";
    case Level::kHoldoutExtrapolate: return "holdout_extrapolate";
  }
  throw ContractError("unknown level");
}

Family parse_family(const std::string& name) {
  for (Family f : all_families()) {
    if (family_name(f) == name) return f;
  }
  throw ContractError("unknown family '" + name + "'");
}

Level parse_level(const std::string& name) {
  for (Level l : all_levels()) {
    if (level_name(l) == name) return l;
  }
  if (name == "small") return Level::kTrainSmall;
  if (name == "large") return Level::kTrainLarge;
  if (name == "interpolate") return Level::kHoldoutInterpolate;
  if (name == "extrapolate") return Level::kHoldoutExtrapolate;
  throw ContractError("unknown level '" + name + "'");
}

bool is_holdout(Level l) { return l == Level::kHoldoutInterpolate || l == Level::kHoldoutExtrapolate; }

bool is_psychlab(Family f) {
  return f == Family::kArbitraryVisuomotorMapping || f == Family::kContinuousRecognition ||
         f == Family::kChangeDetection || f == Family::kWhatThenWhere;
}

bool is_spot_diff(Family f) {
  return f == Family::kSpotDiffBasic || f == Family::kSpotDiffPassive || f == Family::kSpotDiffMultiObject ||
         f == Family::kSpotDiffMotion;
}

bool is_navigation(Family f) {
  return f == Family::kInvisibleGoalEmptyArena || f == Family::kInvisibleGoalBuildings ||
         f == Family::kVisibleGoalBuildings || f == Family::kVisibleGoalMaze;
}

std::size_t num_actions(Family f) { return is_psychlab(f) ? 5 : 8; }

double ewma_alpha(Family f) { return is_psychlab(f) || f == Family::kVisibleGoalMaze ? 0.05 : 0.001; }

TaskSpec task_spec(Family f, Level l, std::uint64_t seed, const TaskOptions& opts) {
  TaskSpec s{f, l, seed, {}, {}, {}, {}};
  const bool hold = is_holdout(l);
  const int li = static_cast<int>(l);
  auto pick = [&](std::vector<std::vector<int>> by_level) { return by_level[static_cast<std::size_t>(li)]; };
  switch (f) {
    case Family::kArbitraryVisuomotorMapping:
    case Family::kContinuousRecognition: {
      s.scale_name = "trials";
      if (opts.trials_override > 0) {
        const int n = opts.trials_override;
        s.scale_values = pick({{n}, {n}, {scaled(n, 40)}, {scaled(n, 75)}});
      } else {
        s.scale_values = pick({{50}, {50}, {40}, {75}});
      }
      s.stimulus_name = "image";
      s.stimulus_pool = range_ids(hold ? 1 : 0, catalog::kNumImages / 2, 2);
      break;
    }
    case Family::kChangeDetection:
      s.scale_name = "delay";
      s.scale_values = pick({{2, 4, 8}, {64, 128}, {16, 32}, {130, 150, 200, 250}});
      s.stimulus_name = "color";
      s.stimulus_pool = hold ? colors({"Yellow", "Lime", "Pink", "Sky", "Violet"})
                             : colors({"Amethyst", "Caramel", "Honeydew", "Jade", "Mallow"});
      break;
    case Family::kWhatThenWhere:
      s.scale_name = "delay";
      s.scale_values = pick({{4, 8}, {32, 128}, {16, 64}, {132, 156, 200, 256}});
      s.stimulus_name = "digit";
      for (int d = 0; d < 5; ++d) s.stimulus_pool.push_back(catalog::digit(hold ? d + 5 : d));
      break;
    case Family::kSpotDiffBasic:
    case Family::kSpotDiffPassive:
    case Family::kSpotDiffMotion:
    case Family::kSpotDiffMultiObject:
      if (f == Family::kSpotDiffMultiObject) {
        s.scale_name = "objects";
        s.scale_values = pick({{2, 3}, {5, 6}, {4}, {7}});
      } else {
        s.scale_name = "corridor_delay";
        s.scale_values = pick({{0}, {10}, {5}, {15}});
      }
      if (f == Family::kSpotDiffMotion) {
        s.stimulus_name = "motion_pattern";
        for (int i = 0; i < 6; ++i) s.stimulus_pool.push_back(catalog::motion(hold ? i + 6 : i));
      } else {
        s.stimulus_name = "color";
        s.stimulus_pool = hold ? colors({"Yellow", "Brown", "Pink", "Orange", "Purple"})
                               : colors({"Red", "Green", "Blue", "White", "Slate"});
      }
      break;
    case Family::kInvisibleGoalEmptyArena:
    case Family::kInvisibleGoalBuildings:
    case Family::kVisibleGoalBuildings:
      s.scale_name = "arena_size";
      s.scale_values = pick({{10}, {20}, {15}, {25}});
      s.stimulus_name = "goal_spawn_region";
      s.stimulus_pool = hold ? std::vector<int>{kRegionNE, kRegionSW} : std::vector<int>{kRegionNW, kRegionSE};
      break;
    case Family::kVisibleGoalMaze:
      s.scale_name = "arena_size";
      s.scale_values = pick({{11}, {21}, {15}, {27}});
      s.stimulus_name = "goal_spawn_region";
      s.stimulus_pool = {hold ? kRegionSouth : kRegionNorth};
      break;
    case Family::kTransitiveInference:
      s.scale_name = "chain_length";
      s.scale_values = pick({{5}, {7}, {6}, {8}});
      s.stimulus_name = "color";
      s.stimulus_pool = hold ? colors({"Slate", "Yellow", "Brown", "Lime", "Magenta", "Mint", "Navy", "Olive",
                                       "Teal", "Turquoise"})
                             : colors({"Red", "Green", "Blue", "White", "Black", "Pink", "Orange", "Purple",
                                       "Grey", "Tan"});
      break;
  }
  if (opts.tiny && s.stimulus_pool.size() > 2 && !is_navigation(f)) s.stimulus_pool.resize(2);
  return s;
}

std::vector<std::string> stimulus_labels(const TaskSpec& spec) {
  std::vector<std::string> out;
  for (int id : spec.stimulus_pool) {
    if (is_navigation(spec.family)) {
      static const char* regions[] = {"NW quadrant", "NE quadrant", "SW quadrant", "SE quadrant", "north half",
                                      "south half"};
      out.emplace_back(regions[id]);
    } else {
      out.push_back(catalog::label(id));
    }
  }
  return out;
}

}  // namespace mra::taskforge
