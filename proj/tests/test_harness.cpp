// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mra/common/errors.hpp"
#include "mra/harness/report.hpp"

using namespace mra;
using namespace mra::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mra_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Smoothing and selection written out step by step.
struct OracleScore {
  std::size_t snapshot = 0;
  double reward[3];
};

OracleScore oracle_score(const SeedCurves& c, double alpha, std::size_t window) {
  const std::vector<double>* curves[3] = {&c.train, &c.interpolate, &c.extrapolate};
  const std::size_t n = c.train.size();
  std::vector<std::vector<double>> rolled(3, std::vector<double>(n));
  for (int l = 0; l < 3; ++l) {
    std::vector<double> sm(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double a = c.episodes[t] >= 1.0 ? 1.0 - std::pow(1.0 - alpha, c.episodes[t]) : alpha;
      sm[t] = t == 0 ? (*curves[l])[0] : a * (*curves[l])[t] + (1.0 - a) * sm[t - 1];
    }
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t lo = t + 1 >= window ? t + 1 - window : 0;
      double s = 0.0;
      for (std::size_t i = lo; i <= t; ++i) s += sm[i];
      rolled[l][t] = s / static_cast<double>(t - lo + 1);
    }
  }
  OracleScore o{};
  for (std::size_t t = 0; t < n; ++t) {
    if (rolled[0][t] > rolled[0][o.snapshot]) o.snapshot = t;
  }
  for (int l = 0; l < 3; ++l) o.reward[l] = rolled[l][o.snapshot];
  return o;
}

MatrixSpec tiny_matrix() {
  MatrixSpec m;
  m.families = {taskforge::Family::kArbitraryVisuomotorMapping};
  m.configs = {parse_ablation("LSTM")};
  m.seeds = {1, 2};
  m.budget = 400;
  m.overrides = {{"learner.unroll", "10"},          {"controller.hidden", "8"}, {"controller.embed", "8"},
                 {"controller.encoder_hidden", "8"}, {"eval.interval", "100"},   {"eval.episodes", "2"},
                 {"eval.baseline_episodes", "20"},   {"run.checkpoint_interval", "200"}};
  return m;
}

}  // namespace

TEST_CASE("ablation table") {
  const auto& cfgs = ablation_configs();
  CHECK(cfgs.size() == 10);
  std::set<std::string> names;
  for (const auto& c : cfgs) {
    names.insert(c.name());
    CHECK(parse_ablation(c.name()) == c);
  }
  CHECK(names.size() == 10);
  CHECK(names.count("LSTM+MEM+CPC-noJB") == 1);
  CHECK(parse_ablation("MRA") == parse_ablation("LSTM+MEM+CPC"));
  CHECK_THROWS_AS(parse_ablation("GRU"), ContractError);
}

TEST_CASE("parameter ids match each ablation") {
  for (const auto& c : ablation_configs()) {
    CAPTURE(c.name());
    const auto s = desk_settings(taskforge::Family::kTransitiveInference, c, 1);
    const auto ids = learner::init_agent_params<float>(s.agent, 1).ids();
    CHECK(audit_param_ids(c, ids).empty());
  }
  const auto lstm = desk_settings(taskforge::Family::kTransitiveInference, parse_ablation("LSTM+MEM"), 1);
  const auto ids = learner::init_agent_params<float>(lstm.agent, 1).ids();
  CHECK(!audit_param_ids(parse_ablation("FF"), ids).empty());
  CHECK(!audit_param_ids(parse_ablation("LSTM+MEM+CPC"), ids).empty());
}

TEST_CASE("matrix expansion") {
  MatrixSpec m;
  m.families = taskforge::all_families();
  m.configs = ablation_configs();
  m.seeds = {7};
  m.budget = 1234;
  const auto runs = expand_matrix(m);
  CHECK(runs.size() == 130);
  std::set<fs::path> dirs;
  for (const auto& s : runs) {
    CHECK(s.budget == 1234);
    dirs.insert(run_dir("root", s.family, s.config, s.seed));
  }
  CHECK(dirs.size() == 130);
  CHECK(run_dir("root", taskforge::Family::kTransitiveInference, parse_ablation("MRA"), 3) ==
        fs::path("root") / "transitive_inference" / "LSTM+MEM+CPC" / "3");
}

TEST_CASE("settings round trip and errors") {
  auto s = desk_settings(taskforge::Family::kChangeDetection, parse_ablation("LSTM+MEM+REC"), 5);
  s.learner.optimizer.learning_rate = 0.1;
  s.agent.mem.neighbors = 3;
  const std::string text = format_settings(s);
  auto t = desk_settings(taskforge::Family::kArbitraryVisuomotorMapping, parse_ablation("FF"), 1);
  apply_key_values(t, parse_key_values(text));
  CHECK(to_key_values(t) == to_key_values(s));
  CHECK(format_settings(t) == text);
  CHECK(t.agent.ctrl.obs.flat_size() == s.agent.ctrl.obs.flat_size());

  CHECK_THROWS_AS(parse_key_values("[run]\nbogus = 1\n"), ContractError);
  CHECK_THROWS_AS(parse_key_values("[nowhere]\nseed = 1\n"), ContractError);
  CHECK_THROWS_AS(parse_key_values("seed = 1\n"), ContractError);
  CHECK_THROWS_AS(parse_key_values("[run]\nseed = 1\nseed = 2\n"), ContractError);
  CHECK_THROWS_AS(apply_key_values(t, {{"run.seed", "x"}}), ContractError);
  CHECK_THROWS_AS(apply_key_values(t, {{"task.tiny", "maybe"}}), ContractError);
  CHECK(parse_key_values("# comment\n[run]\nseed = 9  # trailing\n").at("run.seed") == "9");
  CHECK(settings_keys().size() == to_key_values(s).size());
}

TEST_CASE("smoothing examples") {
  CHECK(ewma({0.0, 10.0}, 0.5) == std::vector<double>{0.0, 5.0});
  CHECK(rolling_mean({1, 2, 3, 4}, 2) == std::vector<double>{1.0, 1.5, 2.5, 3.5});
  CHECK(point_alpha(0.5, 2.0) == 0.75);
  CHECK(point_alpha(0.05, 0.0) == 0.05);
  CHECK_THROWS_AS(ewma({1.0}, 0.0), ContractError);
  CHECK_THROWS_AS(ewma({}, 0.5), ContractError);
  CHECK_THROWS_AS(rolling_mean({1.0}, 0), ContractError);
}

TEST_CASE("normalized score endpoints") {
  CHECK(normalized_score(0.06, 0.06, 50.0) == 0.0);
  CHECK(normalized_score(50.0, 0.06, 50.0) == 100.0);
  CHECK(normalized_score(2.0, 1.0, 3.0) == 50.0);
  CHECK(normalized_score(0.0, 1.0, 3.0) == -50.0);
  CHECK_THROWS_AS(normalized_score(1.0, 2.0, 2.0), ContractError);
}

TEST_CASE("score_seed matches the step-by-step oracle") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Baselines b;
  for (int l = 0; l < 3; ++l) {
    b.random[l] = 1.0;
    b.oracle[l] = 11.0;
  }
  for (int trial = 0; trial < 200; ++trial) {
    SeedCurves c;
    const std::size_t n = 1 + rng() % 30;
    for (std::size_t t = 0; t < n; ++t) {
      c.steps.push_back(t * 100);
      c.train.push_back(u(rng));
      c.interpolate.push_back(u(rng));
      c.extrapolate.push_back(u(rng));
      c.episodes.push_back(static_cast<double>(rng() % 5));
    }
    const double alpha = trial % 2 ? 0.05 : 0.3;
    const std::size_t window = 1 + rng() % 10;
    const auto got = score_seed(c, b, alpha, window);
    const auto want = oracle_score(c, alpha, window);
    CHECK(got.snapshot == want.snapshot);
    CHECK(got.snapshot_step == c.steps[want.snapshot]);
    for (int l = 0; l < 3; ++l) {
      CHECK(std::abs(got.reward[l] - want.reward[l]) <= 1e-12);
      CHECK(std::abs(got.score[l] - (want.reward[l] - 1.0) * 10.0) <= 1e-10);
    }
  }
}

TEST_CASE("snapshot selection on adversarial curves") {
  Baselines b;
  for (int l = 0; l < 3; ++l) b.oracle[l] = 10.0;
  SeedCurves c;
  c.steps = {0, 1, 2, 3, 4};
  c.episodes = {1, 1, 1, 1, 1};
  // Holdout peaks where training does not; ties in training go to the first.
  c.train = {1, 5, 5, 2, 5};
  c.interpolate = {10, 0, 10, 10, 10};
  c.extrapolate = {10, 3, 10, 10, 10};
  auto s = score_seed(c, b, 1.0, 1);
  CHECK(s.snapshot == 1);
  CHECK(s.reward[1] == 0.0);
  CHECK(s.score[2] == 30.0);
  // A single-point spike loses to a sustained plateau once smoothed.
  c.train = {0, 10, 0, 6, 6, 6};
  c.interpolate = {0, 1, 0, 2, 2, 2};
  c.extrapolate = c.interpolate;
  c.steps = {0, 1, 2, 3, 4, 5};
  c.episodes = {1, 1, 1, 1, 1, 1};
  s = score_seed(c, b, 1.0, 3);
  CHECK(s.snapshot == 5);
  CHECK(s.reward[1] == 2.0);
  c.train.pop_back();
  CHECK_THROWS_AS(score_seed(c, b, 1.0, 3), ContractError);
}

TEST_CASE("aggregate uses the standard error of the mean") {
  const auto a = aggregate({1.0, 2.0, 3.0});
  CHECK(a.mean == 2.0);
  CHECK(a.stderr_ == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(a.n == 3);
  CHECK(aggregate({4.0}).stderr_ == 0.0);
}

TEST_CASE("report csv round trip is exact") {
  std::vector<ReportRow> rows{{"LSTM", "avm", "train", 0.1, 1.0 / 3.0, 3, 1e-300},
                              {"LSTM+MEM+CPC-noJB", "transitive_inference", "extrapolate", -12.5, 0.0, 1,
                               std::nextafter(1.0, 2.0)}};
  CHECK(parse_report_csv(report_csv(rows)) == rows);
  CHECK_THROWS_AS(parse_report_csv("a,b\n"), ContractError);
  CHECK_THROWS_AS(parse_report_csv(report_csv({}) + "x,y,z\n"), ContractError);
}

TEST_CASE("heatmap order sorts by mean training score") {
  std::vector<ReportRow> rows;
  auto add = [&](const std::string& c, const std::string& f, double train) {
    rows.push_back({c, f, "train", train, 0, 1, 0});
    rows.push_back({c, f, "interpolate", 0, 0, 1, 0});
  };
  add("LSTM", "avm", 10);
  add("LSTM", "change_detection", 30);
  add("MRA", "avm", 50);
  add("MRA", "change_detection", 70);
  add("FF", "avm", 10);
  add("FF", "change_detection", 30);
  const auto o = heatmap_order(rows);
  REQUIRE(o.configs.size() == 3);
  CHECK(o.configs[0] == "MRA");
  CHECK(std::set<std::string>(o.configs.begin() + 1, o.configs.end()) == std::set<std::string>{"LSTM", "FF"});
  CHECK(o.families == std::vector<std::string>{"change_detection", "avm"});
  CHECK(heatmap_text(rows).find("oracle-normalized") != std::string::npos);
}

TEST_CASE("empty reports are an error") {
  const auto dir = fresh_dir("empty");
  CHECK_THROWS_AS(emit_report(ScoreReport{}, dir), ContractError);
  CHECK_THROWS_AS(build_report(dir / "missing"), ContractError);
}

TEST_CASE("tiny matrix trains, reports and reproduces") {
  const auto root = fresh_dir("matrix");
  const auto results = run_matrix(tiny_matrix(), root);
  REQUIRE(results.size() == 2);
  for (const auto& r : results) {
    CAPTURE(r.error);
    CHECK(r.ok);
    CHECK(r.frames >= 400);
    CHECK(r.learner_steps == r.frames / 20);
    CHECK(audit_param_ids(parse_ablation("LSTM"), r.param_ids).empty());
    for (const char* f : {"run.cfg", "metrics.csv", "eval.csv", "baselines.csv", "final.mra", "status.txt"}) {
      CHECK(fs::exists(r.dir / f));
    }
    CHECK(fs::exists(r.dir / "ckpt_200.mra"));
    const auto curves = read_eval_csv(r.dir / "eval.csv");
    CHECK(curves.steps.front() == 0);
    CHECK(curves.steps.size() == 5);
    const auto b = read_baselines_csv(r.dir / "baselines.csv");
    for (int l = 0; l < 3; ++l) CHECK(b.oracle[l] > b.random[l]);
    CHECK(load_settings(r.dir / "run.cfg").seed == r.dir.filename().string().front() - '0');
  }

  const auto report = build_report(root);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.config == "LSTM");
    CHECK(row.family == "avm");
    CHECK(row.seeds == 2);
    CHECK(std::isfinite(row.score));
  }
  CHECK(report.runs.size() == 2);
  const auto out = root / "report";
  emit_report(report, out);
  CHECK(parse_report_csv(slurp(out / "report.csv")) == report.rows);
  CHECK(fs::exists(out / "heatmap.txt"));
  CHECK(fs::exists(out / "manifest.csv"));
  CHECK(report_csv(build_report(root).rows) == slurp(out / "report.csv"));

  // Training is deterministic given the seed.
  const auto again = fresh_dir("matrix_again");
  run_matrix(tiny_matrix(), again);
  for (const char* seed : {"1", "2"}) {
    const auto rel = fs::path("avm") / "LSTM" / seed;
    CHECK(slurp(root / rel / "eval.csv") == slurp(again / rel / "eval.csv"));
    CHECK(slurp(root / rel / "final.mra") == slurp(again / rel / "final.mra"));
  }

  // A failed run is recorded and left out of the scores.
  auto bad = expand_matrix(tiny_matrix()).front();
  bad.seed = 9;
  bad.unroll = 0;
  const auto failed = run_training(bad, run_dir(root, bad.family, bad.config, bad.seed));
  CHECK(!failed.ok);
  CHECK(slurp(failed.dir / "status.txt").rfind("failed", 0) == 0);
  const auto with_failure = build_report(root);
  CHECK(with_failure.rows == report.rows);
  CHECK(with_failure.runs.size() == 3);
  CHECK(manifest_csv(with_failure.runs).find("failed") != std::string::npos);
}
