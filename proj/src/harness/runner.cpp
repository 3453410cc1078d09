// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/harness/runner.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mra/common/errors.hpp"
#include "mra/diffcore/checkpoint.hpp"
#include "mra/learner/learner.hpp"

namespace mra::harness {

namespace fs = std::filesystem;
using diffcore::ParameterSet;
using learner::Actor;
using learner::Learner;
using learner::Trajectory;
using taskforge::Family;
using taskforge::Level;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return mix(mix(seed) ^ mix(stream * 0x100000001b3ULL + index));
}

enum Stream : std::uint64_t { kParams = 1, kEnv, kActor, kEval, kBaseline };

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, const fs::path& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ContractError(where.string() + ": bad number '" + s + "'");
  }
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) throw ContractError(path.string() + ": unexpected header");
  std::vector<std::vector<std::string>> rows;
  const std::size_t cols = split(header, ',').size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line, ',');
    if (row.size() != cols) throw ContractError(path.string() + ": wrong column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_status(const fs::path& dir, const RunResult& r) {
  std::ofstream out(dir / "status.txt");
  out << (r.ok ? std::string("ok") : "failed: " + r.error) << '\n';
  out << "frames=" << r.frames << '\n';
  out << "learner_steps=" << r.learner_steps << '\n';
  out << "wall_seconds=" << fmt(r.wall_seconds) << '\n';
  out << "param_ids=";
  for (std::size_t i = 0; i < r.param_ids.size(); ++i) out << (i ? ";" : "") << r.param_ids[i];
  out << '\n';
}

// Bounded trajectory queue for the threaded mode.
class TrajectoryQueue {
 public:
  explicit TrajectoryQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(Trajectory<float> t) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(t));
    not_empty_.notify_one();
    return true;
  }

  Trajectory<float> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty(); });
    Trajectory<float> t = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return t;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<Trajectory<float>> items_;
  bool closed_ = false;
};

}  // namespace

fs::path run_dir(const fs::path& root, Family f, const AblationConfig& cfg, std::uint64_t seed) {
  return root / taskforge::family_name(f) / cfg.name() / std::to_string(seed);
}

Baselines compute_baselines(Family f, const taskforge::TaskOptions& opts, std::size_t episodes) {
  Baselines b;
  const Level levels[] = {Level::kTrainSmall, Level::kTrainLarge, Level::kHoldoutInterpolate,
                          Level::kHoldoutExtrapolate};
  double rnd[4], orc[4];
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t seed = derive(0, kBaseline, static_cast<std::uint64_t>(i));
    auto task = taskforge::make_task(f, levels[i], seed, opts);
    orc[i] = taskforge::oracle_reward(*task, episodes).mean;
    auto task2 = taskforge::make_task(f, levels[i], seed, opts);
    rnd[i] = taskforge::random_reward(*task2, episodes, seed).mean;
  }
  b.random[0] = 0.5 * (rnd[0] + rnd[1]);
  b.oracle[0] = 0.5 * (orc[0] + orc[1]);
  for (int k = 1; k < 3; ++k) {
    b.random[k] = rnd[k + 1];
    b.oracle[k] = orc[k + 1];
  }
  return b;
}

Evaluator::Evaluator(const RunSettings& s) : s_(&s), rng_(derive(s.seed, kEval)) {
  const Level levels[] = {Level::kTrainSmall, Level::kTrainLarge, Level::kHoldoutInterpolate,
                          Level::kHoldoutExtrapolate};
  for (int i = 0; i < 4; ++i)
    tasks_.push_back(taskforge::make_task(s.family, levels[i], derive(s.seed, kEval, static_cast<std::uint64_t>(i + 1)),
                                          s.task));
}

std::array<double, 3> Evaluator::evaluate(const ParameterSet<float>& params) {
  const std::size_t n = std::max<std::size_t>(1, s_->eval_episodes);
  // Clones replay the same episodes at every evaluation point.
  auto mean_of = [&](const taskforge::TaskInstance& proto, std::size_t episodes) {
    auto task = proto.clone();
    double sum = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) sum += learner::run_episode(params, s_->agent, *task, true, rng_);
    return sum;
  };
  const std::size_t small = (n + 1) / 2, large = n / 2;
  std::array<double, 3> out{};
  out[0] = (mean_of(*tasks_[0], small) + mean_of(*tasks_[1], large)) / static_cast<double>(n);
  out[1] = mean_of(*tasks_[2], n) / static_cast<double>(n);
  out[2] = mean_of(*tasks_[3], n) / static_cast<double>(n);
  return out;
}

RunResult run_training(const RunSettings& s, const fs::path& dir, const ProgressFn& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.dir = dir;
  fs::create_directories(dir);
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  auto say = [&](const std::string& m) {
    if (progress) progress(m);
  };
  try {
    {
      std::ofstream cfg(dir / "run.cfg");
      cfg << format_settings(s);
    }
    if (s.batch_size == 0 || s.unroll == 0) throw ContractError("run: batch_size and unroll must be positive");
    r.baselines = compute_baselines(s.family, s.task, s.baseline_episodes);
    {
      std::ofstream out(dir / "baselines.csv");
      out << "level,random,oracle\n";
      const char* names[] = {"train", "interpolate", "extrapolate"};
      for (int k = 0; k < 3; ++k) out << names[k] << ',' << fmt(r.baselines.random[k]) << ',' << fmt(r.baselines.oracle[k]) << '\n';
    }

    Learner<float> learner(s.agent, s.learner, learner::init_agent_params<float>(s.agent, derive(s.seed, kParams)));
    r.param_ids = learner.params().ids();
    fs::remove(dir / "metrics.csv");
    learner::MetricsWriter metrics(dir / "metrics.csv");
    std::ofstream eval_out(dir / "eval.csv");
    eval_out << "step,episodes,train,interpolate,extrapolate\n";
    Evaluator evaluator(s);

    std::vector<std::unique_ptr<taskforge::TrainingMixture>> envs;
    std::vector<Actor<float>> actors;
    for (std::size_t b = 0; b < s.batch_size; ++b)
      envs.push_back(std::make_unique<taskforge::TrainingMixture>(s.family, derive(s.seed, kEnv, b), s.task));
    for (std::size_t b = 0; b < s.batch_size; ++b) actors.emplace_back(s.agent, *envs[b], derive(s.seed, kActor, b));

    std::vector<double> recent;
    double episodes_since = 0.0;
    auto record_returns = [&](const std::vector<double>& rets) {
      for (double x : rets) {
        recent.push_back(x);
        if (recent.size() > 100) recent.erase(recent.begin());
      }
      episodes_since += static_cast<double>(rets.size());
    };
    auto record_eval = [&](std::uint64_t step) {
      const auto v = evaluator.evaluate(learner.params());
      r.curves.steps.push_back(step);
      r.curves.episodes.push_back(episodes_since);
      r.curves.train.push_back(v[0]);
      r.curves.interpolate.push_back(v[1]);
      r.curves.extrapolate.push_back(v[2]);
      eval_out << step << ',' << fmt(episodes_since) << ',' << fmt(v[0]) << ',' << fmt(v[1]) << ',' << fmt(v[2]) << '\n';
      eval_out.flush();
      episodes_since = 0.0;
      std::ostringstream m;
      m.precision(4);
      m << "frames " << step << " train " << v[0] << " interp " << v[1] << " extrap " << v[2] << " t " << elapsed()
        << "s";
      say(m.str());
    };

    record_eval(0);
    const std::uint64_t per_step = s.batch_size * s.unroll;
    std::uint64_t next_eval = s.eval_interval, next_ckpt = s.checkpoint_interval;
    auto after_step = [&](const learner::TrainMetrics& m) {
      r.frames += per_step;
      ++r.learner_steps;
      double mean = 0.0;
      for (double x : recent) mean += x;
      if (!recent.empty()) mean /= static_cast<double>(recent.size());
      metrics.append(r.frames, mean, m);
      if (s.checkpoint_interval > 0 && r.frames >= next_ckpt) {
        diffcore::save_checkpoint(dir / ("ckpt_" + std::to_string(r.frames) + ".mra"), learner.params());
        while (next_ckpt <= r.frames) next_ckpt += s.checkpoint_interval;
      }
      if (s.eval_interval > 0 && r.frames >= next_eval) {
        record_eval(r.frames);
        while (next_eval <= r.frames) next_eval += s.eval_interval;
      }
    };

    if (s.actor_threads == 0) {
      while (r.frames < s.budget) {
        std::vector<Trajectory<float>> batch;
        batch.reserve(actors.size());
        for (auto& a : actors) {
          batch.push_back(a.rollout(learner.params(), s.unroll));
          record_returns(a.take_returns());
        }
        after_step(learner.train_step(batch));
      }
    } else {
      // Actors run on worker threads against the latest published snapshot.
      std::mutex snap_mu, ret_mu;
      auto snapshot = std::make_shared<const ParameterSet<float>>(learner.params());
      std::vector<double> pending;
      TrajectoryQueue queue(2 * s.batch_size);
      std::atomic<bool> stop{false};
      std::vector<std::thread> workers;
      const std::size_t nt = std::min(s.actor_threads, actors.size());
      for (std::size_t w = 0; w < nt; ++w) {
        workers.emplace_back([&, w] {
          while (!stop.load()) {
            for (std::size_t a = w; a < actors.size() && !stop.load(); a += nt) {
              std::shared_ptr<const ParameterSet<float>> snap;
              {
                std::lock_guard lock(snap_mu);
                snap = snapshot;
              }
              Trajectory<float> t = actors[a].rollout(*snap, s.unroll);
              {
                auto rets = actors[a].take_returns();
                std::lock_guard lock(ret_mu);
                pending.insert(pending.end(), rets.begin(), rets.end());
              }
              if (!queue.push(std::move(t))) return;
            }
          }
        });
      }
      std::exception_ptr failure;
      try {
        while (r.frames < s.budget) {
          std::vector<Trajectory<float>> batch;
          for (std::size_t b = 0; b < s.batch_size; ++b) batch.push_back(queue.pop());
          {
            std::lock_guard lock(ret_mu);
            record_returns(pending);
            pending.clear();
          }
          const auto m = learner.train_step(batch);
          {
            std::lock_guard lock(snap_mu);
            snapshot = std::make_shared<const ParameterSet<float>>(learner.params());
          }
          after_step(m);
        }
      } catch (...) {
        failure = std::current_exception();
      }
      stop = true;
      queue.close();
      for (auto& t : workers) t.join();
      if (failure) std::rethrow_exception(failure);
    }
    if (r.curves.steps.back() != r.frames) record_eval(r.frames);
    diffcore::save_checkpoint(dir / "final.mra", learner.params());
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
    say("failed: " + r.error);
  }
  r.wall_seconds = elapsed();
  write_status(dir, r);
  return r;
}

std::vector<RunSettings> expand_matrix(const MatrixSpec& spec) {
  std::vector<RunSettings> out;
  for (Family f : spec.families)
    for (const AblationConfig& c : spec.configs)
      for (std::uint64_t seed : spec.seeds) {
        RunSettings s = desk_settings(f, c, seed);
        s.budget = spec.budget;
        apply_key_values(s, spec.overrides);
        finalize_settings(s);
        out.push_back(std::move(s));
      }
  return out;
}

std::vector<RunResult> run_matrix(const MatrixSpec& spec, const fs::path& root, const ProgressFn& progress) {
  std::vector<RunResult> out;
  for (const RunSettings& s : expand_matrix(spec)) {
    const fs::path dir = run_dir(root, s.family, s.config, s.seed);
    if (progress) progress("run " + dir.string());
    out.push_back(run_training(s, dir, progress));
  }
  return out;
}

SeedCurves read_eval_csv(const fs::path& path) {
  SeedCurves c;
  for (const auto& row : read_csv(path, "step,episodes,train,interpolate,extrapolate")) {
    c.steps.push_back(static_cast<std::uint64_t>(to_double(row[0], path)));
    c.episodes.push_back(to_double(row[1], path));
    c.train.push_back(to_double(row[2], path));
    c.interpolate.push_back(to_double(row[3], path));
    c.extrapolate.push_back(to_double(row[4], path));
  }
  return c;
}

Baselines read_baselines_csv(const fs::path& path) {
  Baselines b;
  const auto rows = read_csv(path, "level,random,oracle");
  const char* names[] = {"train", "interpolate", "extrapolate"};
  if (rows.size() != 3) throw ContractError(path.string() + ": expected 3 rows");
  for (int k = 0; k < 3; ++k) {
    if (rows[static_cast<std::size_t>(k)][0] != names[k]) throw ContractError(path.string() + ": unexpected level");
    b.random[k] = to_double(rows[static_cast<std::size_t>(k)][1], path);
    b.oracle[k] = to_double(rows[static_cast<std::size_t>(k)][2], path);
  }
  return b;
}

}  // namespace mra::harness
