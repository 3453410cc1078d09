// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Training runs and the ablation matrix. A run directory
// <root>/<family>/<config>/<seed>/ holds:
//
//   run.cfg          settings in key=value form
//   metrics.csv      one row per learner step
//   eval.csv         step, episodes, train, interpolate, extrapolate
//   baselines.csv    level, random, oracle
//   ckpt_<frames>.mra, final.mra
//   status.txt       "ok" or "failed: <reason>", then key=value metadata

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mra/harness/score.hpp"
#include "mra/harness/settings.hpp"

namespace mra::harness {

std::filesystem::path run_dir(const std::filesystem::path& root, taskforge::Family f, const AblationConfig& cfg,
                              std::uint64_t seed);

struct RunResult {
  bool ok = false;
  std::string error;
  std::uint64_t frames = 0;
  std::uint64_t learner_steps = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> param_ids;
  SeedCurves curves;
  Baselines baselines;
  std::filesystem::path dir;
};

// Random and oracle rewards on the train mixture (mean of both training
// levels), holdout-interpolate and holdout-extrapolate.
Baselines compute_baselines(taskforge::Family f, const taskforge::TaskOptions& opts, std::size_t episodes);

// Greedy episodes with frozen parameters; train splits its episodes over
// both training levels.
class Evaluator {
 public:
  explicit Evaluator(const RunSettings& s);
  // Mean rewards indexed train, interpolate, extrapolate.
  std::array<double, 3> evaluate(const diffcore::ParameterSet<float>& params);

 private:
  const RunSettings* s_;
  std::vector<std::unique_ptr<taskforge::TaskInstance>> tasks_;  // small, large, interp, extrap
  std::mt19937_64 rng_;
};

using ProgressFn = std::function<void(const std::string&)>;

// Trains one run into `dir`. A non-finite loss or any other failure ends the
// run with ok = false and a "failed" status file; it never throws for those.
RunResult run_training(const RunSettings& s, const std::filesystem::path& dir, const ProgressFn& progress = {});

struct MatrixSpec {
  std::vector<taskforge::Family> families;
  std::vector<AblationConfig> configs;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::uint64_t budget = 200000;
  // Applied to every run after the desk defaults.
  KeyValues overrides;
};

// Every (family, config, seed) triple in family-major order.
std::vector<RunSettings> expand_matrix(const MatrixSpec& spec);

std::vector<RunResult> run_matrix(const MatrixSpec& spec, const std::filesystem::path& root,
                                  const ProgressFn& progress = {});

// eval.csv / baselines.csv readers used by the report.
SeedCurves read_eval_csv(const std::filesystem::path& path);
Baselines read_baselines_csv(const std::filesystem::path& path);

}  // namespace mra::harness
