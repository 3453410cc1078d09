// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: train, eval, report, gradcheck, tasks, settings.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "mra/common/errors.hpp"
#include "mra/diffcore/checkpoint.hpp"
#include "mra/harness/gradcheck_suite.hpp"
#include "mra/harness/report.hpp"
#include "mra/harness/runner.hpp"
#include "mra/learner/learner.hpp"
#include "mra/taskforge/task.hpp"

namespace fs = std::filesystem;
using namespace mra;
using namespace mra::harness;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ContractError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

KeyValues parse_sets(const std::vector<std::string>& sets) {
  KeyValues kv;
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ContractError("--set expects section.key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + std::to_string(xs[i]);
  return out;
}

int cmd_train(const std::string& family, const std::string& config, std::uint64_t seed, std::uint64_t budget,
              const std::string& settings_path, const std::vector<std::string>& sets, const std::string& runs,
              std::size_t threads) {
  RunSettings s = desk_settings(taskforge::parse_family(family), parse_ablation(config), seed);
  if (!settings_path.empty()) apply_key_values(s, parse_key_values(read_text(settings_path)));
  apply_key_values(s, parse_sets(sets));
  s.family = taskforge::parse_family(family);
  s.config = parse_ablation(config);
  s.seed = seed;
  s.budget = budget;
  s.actor_threads = threads;
  finalize_settings(s);
  const fs::path dir = run_dir(runs, s.family, s.config, s.seed);
  std::printf("run %s\n", dir.string().c_str());
  const RunResult r = run_training(s, dir, [](const std::string& m) {
    std::printf("%s\n", m.c_str());
    std::fflush(stdout);
  });
  if (!r.ok) {
    std::fprintf(stderr, "run failed: %s\n", r.error.c_str());
    return 1;
  }
  const double alpha = s.ewma_alpha > 0 ? s.ewma_alpha : taskforge::ewma_alpha(s.family);
  const SeedScore sc = score_seed(r.curves, r.baselines, alpha, s.window);
  std::printf("snapshot %llu  train %.1f  interpolate %.1f  extrapolate %.1f  (%.0fs)\n",
              static_cast<unsigned long long>(sc.snapshot_step), sc.score[0], sc.score[1], sc.score[2],
              r.wall_seconds);
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& level_name, std::size_t episodes,
             const std::string& settings_path, std::uint64_t seed) {
  const fs::path ckpt(checkpoint);
  const fs::path cfg_path = settings_path.empty() ? ckpt.parent_path() / "run.cfg" : fs::path(settings_path);
  const RunSettings s = load_settings(cfg_path);
  const auto params = diffcore::load_checkpoint<float>(ckpt);
  const taskforge::Level level = taskforge::parse_level(level_name);
  auto task = taskforge::make_task(s.family, level, seed, s.task);
  std::mt19937_64 rng(seed);
  std::vector<double> rewards;
  for (std::size_t e = 0; e < episodes; ++e) rewards.push_back(learner::run_episode(params, s.agent, *task, true, rng));
  const Aggregate a = aggregate(rewards);
  auto o = taskforge::make_task(s.family, level, seed, s.task);
  const double oracle = taskforge::oracle_reward(*o, episodes).mean;
  auto rt = taskforge::make_task(s.family, level, seed, s.task);
  const double random = taskforge::random_reward(*rt, episodes, seed).mean;
  std::printf("family %s  config %s  level %s  episodes %zu\n", taskforge::family_name(s.family).c_str(),
              s.config.name().c_str(), level_name.c_str(), episodes);
  std::printf("reward %.4f +- %.4f  random %.4f  oracle %.4f\n", a.mean, a.stderr_, random, oracle);
  if (oracle > random) std::printf("oracle-normalized score %.2f\n", normalized_score(a.mean, random, oracle));
  return 0;
}

int cmd_report(const std::string& runs, const std::string& out) {
  const ScoreReport rep = build_report(runs);
  const fs::path out_dir = out.empty() ? fs::path(runs) : fs::path(out);
  emit_report(rep, out_dir);
  std::printf("%s", heatmap_text(rep.rows).c_str());
  std::size_t failed = 0;
  for (const auto& m : rep.runs) failed += m.status != "ok";
  std::printf("\n%zu runs, %zu failed; wrote %s\n", rep.runs.size(), failed, (out_dir / "report.csv").string().c_str());
  return 0;
}

int cmd_gradcheck() {
  bool ok = true;
  for (const NamedGradCheck& c : standard_grad_checks()) {
    std::printf("%-20s %s  max_rel_error %.3e  worst %s  elements %zu\n", c.name.c_str(),
                c.report.passed() ? "PASS" : "FAIL", c.report.max_error, c.report.worst_param.c_str(),
                c.report.elements_checked);
    ok = ok && c.report.passed();
  }
  return ok ? 0 : 1;
}

int cmd_tasks_list(const std::string& family) {
  std::printf("family,level,scale,scale_values,stimulus,pool_size,actions,steps_cap\n");
  for (auto f : taskforge::all_families()) {
    if (!family.empty() && taskforge::family_name(f) != family) continue;
    for (auto l : taskforge::all_levels()) {
      const auto spec = taskforge::task_spec(f, l);
      auto task = taskforge::make_task(f, l, 0);
      std::printf("%s,%s,%s,%s,%s,%zu,%zu,%zu\n", taskforge::family_name(f).c_str(), taskforge::level_name(l).c_str(),
                  spec.scale_name.c_str(), join(spec.scale_values).c_str(), spec.stimulus_name.c_str(),
                  spec.stimulus_pool.size(), task->num_actions(), task->step_cap());
    }
  }
  return 0;
}

int cmd_tasks_play(const std::string& family, const std::string& level, std::size_t episodes, std::uint64_t seed) {
  const auto f = taskforge::parse_family(family);
  const auto l = taskforge::parse_level(level);
  auto task = taskforge::make_task(f, l, seed);
  const bool nav = taskforge::is_navigation(f);
  std::printf(nav ? "family,level,episode,trial,reward,time_to_goal\n" : "family,level,episode,trial,reward,steps\n");
  for (const auto& r : taskforge::play_oracle(*task, episodes)) {
    std::printf("%s,%s,%llu,%zu,%g,%zu\n", family.c_str(), level.c_str(), static_cast<unsigned long long>(r.episode),
                r.trial, r.reward, r.steps);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory task suite and agent toolkit"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train one run into <runs>/<family>/<config>/<seed>/");
  std::string family, config = "MRA", settings_path, runs = "runs";
  std::uint64_t seed = 1, budget = 200000;
  std::vector<std::string> sets;
  std::size_t threads = 0;
  train->add_option("--family", family, "Task family")->required();
  train->add_option("--config", config, "Ablation, e.g. LSTM+MEM or MRA");
  train->add_option("--seed", seed, "Run seed");
  train->add_option("--budget", budget, "Environment frames");
  train->add_option("--settings", settings_path, "key=value settings file");
  train->add_option("--set", sets, "Override, section.key=value");
  train->add_option("--runs", runs, "Output root");
  train->add_option("--threads", threads, "Actor threads (0 = deterministic single-threaded)");

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  std::string checkpoint, level;
  std::size_t episodes = 50;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--level", level, "train_small, train_large, holdout_interpolate, holdout_extrapolate")->required();
  eval->add_option("--episodes", episodes, "Episodes");
  eval->add_option("--settings", settings_path, "Settings (default: run.cfg next to the checkpoint)");
  eval->add_option("--seed", seed, "Task seed");

  auto* report = app.add_subcommand("report", "Score report from run directories");
  std::string out;
  report->add_option("--runs", runs, "Run root")->required();
  report->add_option("--out", out, "Output directory (default: the run root)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");

  auto* tasks = app.add_subcommand("tasks", "Task suite tables and oracle play");
  tasks->require_subcommand(1);
  auto* list = tasks->add_subcommand("list", "Family, level, scale and stimulus tables");
  list->add_option("--family", family, "Only this family");
  auto* play = tasks->add_subcommand("play", "Oracle play, one CSV row per trial");
  play->add_option("--family", family, "Task family")->required();
  play->add_option("--level", level, "Level")->required();
  play->add_option("--episodes", episodes, "Episodes");
  play->add_option("--seed", seed, "Task seed");

  auto* settings = app.add_subcommand("settings", "Print the documented settings for a run");
  settings->add_option("--family", family, "Task family")->required();
  settings->add_option("--config", config, "Ablation");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(family, config, seed, budget, settings_path, sets, runs, threads);
    if (*eval) return cmd_eval(checkpoint, level, episodes, settings_path, seed);
    if (*report) return cmd_report(runs, out);
    if (*gradcheck) return cmd_gradcheck();
    if (*list) return cmd_tasks_list(family);
    if (*play) return cmd_tasks_play(family, level, episodes, seed);
    if (*settings) {
      std::printf("%s", format_settings(desk_settings(taskforge::parse_family(family), parse_ablation(config), seed)).c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
