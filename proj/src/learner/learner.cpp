// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/learner/learner.hpp"

#include <cmath>
#include <sstream>

#include "mra/common/errors.hpp"

namespace mra::learner {

using diffcore::Shape;

template <typename T>
Actor<T>::Actor(AgentConfig cfg, Environment& env, std::uint64_t seed)
    : cfg_(std::move(cfg)), env_(&env), rng_(seed), state_(initial_agent_state<T>(cfg_)) {}

template <typename T>
Trajectory<T> Actor<T>::rollout(const ParameterSet<T>& snapshot, std::size_t unroll) {
  if (unroll == 0) throw ContractError("Actor::rollout: unroll length must be positive");
  if (obs_.empty()) obs_ = env_->reset();
  Trajectory<T> tr;
  tr.initial_state = state_;
  tr.params_version = snapshot.version();
  tr.observations.reserve(unroll + 1);
  for (std::size_t t = 0; t < unroll; ++t) {
    tr.observations.push_back(obs_);
    tr.prev_actions.push_back(prev_action_);
    tr.prev_rewards.push_back(prev_reward_);
    ActResult<T> r = act(snapshot, cfg_, state_, obs_);
    const int a = sample_action(std::span<const T>(r.logits), rng_, false);
    StepResult res = env_->step(a);
    ++frames_;
    episode_return_ += res.reward;
    tr.actions.push_back(a);
    tr.rewards.push_back(res.reward);
    tr.dones.push_back(res.done ? 1 : 0);
    tr.behavior_logits.push_back(std::move(r.logits));
    if (res.done) {
      finished_.push_back(episode_return_);
      episode_return_ = 0.0;
      state_ = initial_agent_state<T>(cfg_);
      obs_ = env_->reset();
      prev_action_ = -1;
      prev_reward_ = 0.0;
    } else {
      obs_ = std::move(res.observation);
      prev_action_ = a;
      prev_reward_ = res.reward;
    }
  }
  tr.observations.push_back(obs_);
  return tr;
}

template <typename T>
std::vector<double> Actor<T>::take_returns() {
  std::vector<double> out;
  out.swap(finished_);
  return out;
}

namespace {

template <typename T>
std::vector<double> to_double(const Tensor<T>& t) {
  return std::vector<double>(t.storage().begin(), t.storage().end());
}

}  // namespace

template <typename T>
BatchLoss<T> batch_loss(ParamBinding<T>& pb, const AgentConfig& agent, const LearnerConfig& cfg,
                        const std::vector<Trajectory<T>>& batch) {
  if (batch.empty()) throw ContractError("batch_loss: empty batch");
  diffcore::Tape<T>& tape = pb.tape();
  const auto mode = agent.jumpy ? epmem::WriteMode::kDetached : epmem::WriteMode::kLinked;
  std::vector<Var<T>> per_traj;
  BatchLoss<T> out;
  for (const Trajectory<T>& tr : batch) {
    const std::size_t n = tr.length();
    if (n == 0 || tr.observations.size() != n + 1 || tr.rewards.size() != n || tr.dones.size() != n ||
        tr.behavior_logits.size() != n || tr.prev_actions.size() != n || tr.prev_rewards.size() != n) {
      throw DimensionError("batch_loss: malformed trajectory");
    }
    const Tensor<T> zeros(Shape{agent.ctrl.hidden});
    Var<T> h = tape.constant(tr.initial_state.h);
    Var<T> c = tape.constant(tr.initial_state.c);
    epmem::EpisodicBuffer<T> memory = tr.initial_state.memory.detached();
    std::int64_t step = tr.initial_state.step;
    std::vector<Var<T>> logits, values, xs, hs;
    std::vector<std::size_t> seg_start{0};
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0 && tr.dones[t - 1]) {
        h = tape.constant(zeros);
        c = tape.constant(zeros);
        memory.reset();
        step = 0;
        seg_start.push_back(t);
      }
      auto o = agent_step(pb, agent, tape.constant(observation_tensor<T>(tr.observations[t])), h, c, memory, step,
                          mode);
      h = o.h;
      c = o.c;
      ++step;
      logits.push_back(o.logits);
      values.push_back(o.value);
      xs.push_back(o.x);
      hs.push_back(o.h);
    }
    VTraceInput vin;
    vin.actions = tr.actions;
    vin.rewards = tr.rewards;
    vin.dones = tr.dones;
    for (std::size_t t = 0; t < n; ++t) {
      vin.behavior_logits.emplace_back(tr.behavior_logits[t].begin(), tr.behavior_logits[t].end());
      vin.target_logits.push_back(to_double(logits[t].value()));
      vin.values.push_back(static_cast<double>(values[t].value().item()));
    }
    double bootstrap = 0.0;
    if (!tr.dones.back()) {
      diffcore::Tape<T> side;
      ParamBinding<T> spb(side, pb.params(), false);
      epmem::EpisodicBuffer<T> mem_copy = memory.detached();
      auto o = agent_step(spb, agent, side.constant(observation_tensor<T>(tr.observations[n])),
                          side.constant(h.value()), side.constant(c.value()), mem_copy, step,
                          epmem::WriteMode::kDetached);
      bootstrap = static_cast<double>(o.value.value().item());
    }
    vin.values.push_back(bootstrap);
    VTraceOutput vt = vtrace_targets(vin, cfg.vtrace);
    RlLoss<T> rl = rl_loss(logits, values, tr.actions, vt, cfg.entropy_cost, cfg.baseline_cost);
    out.rl += static_cast<double>(rl.total.value().item());
    out.policy += static_cast<double>(rl.policy.value().item());
    out.baseline += static_cast<double>(rl.baseline.value().item());
    out.entropy += static_cast<double>(rl.entropy.value().item());
    out.vtrace.push_back(std::move(vt));
    Var<T> total = rl.total;

    if (agent.aux == AuxKind::kCpc) {
      seg_start.push_back(n);
      std::vector<std::pair<Var<T>, std::size_t>> parts;
      std::size_t all_pairs = 0;
      for (std::size_t s = 0; s + 1 < seg_start.size(); ++s) {
        const std::size_t a = seg_start[s], b = seg_start[s + 1], len = b - a;
        if (len < 2) continue;
        auxloss::CpcConfig c_cfg = agent.cpc;
        c_cfg.steps = std::min(c_cfg.steps, len - 1);
        std::size_t pairs = 0;
        for (std::size_t k = 1; k <= c_cfg.steps; ++k) pairs += len - k;
        std::vector<Var<T>> seg_h(hs.begin() + static_cast<std::ptrdiff_t>(a), hs.begin() + static_cast<std::ptrdiff_t>(b));
        std::vector<Var<T>> seg_x(xs.begin() + static_cast<std::ptrdiff_t>(a), xs.begin() + static_cast<std::ptrdiff_t>(b));
        parts.emplace_back(auxloss::cpc_loss(pb, seg_h, seg_x, c_cfg), pairs);
        all_pairs += pairs;
      }
      if (!parts.empty()) {
        std::vector<Var<T>> scaled;
        for (auto& [v, pairs] : parts) {
          scaled.push_back(diffcore::scale(v, static_cast<T>(static_cast<double>(pairs) / static_cast<double>(all_pairs))));
        }
        Var<T> aux = diffcore::sum(diffcore::concat(std::span<const Var<T>>(scaled)));
        out.aux += static_cast<double>(aux.value().item());
        total = diffcore::add(total, aux);
      }
    } else if (agent.aux == AuxKind::kRec) {
      auxloss::RecTargets targets;
      targets.prev_rewards = tr.prev_rewards;
      targets.prev_actions = tr.prev_actions;
      targets.num_actions = agent.ctrl.num_actions;
      std::vector<Tensor<T>> obs;
      obs.reserve(n);
      for (std::size_t t = 0; t < n; ++t) obs.push_back(observation_tensor<T>(tr.observations[t]));
      auto rec = auxloss::rec_loss(pb, hs, targets, obs, agent.rec);
      out.aux += static_cast<double>(rec.total.value().item());
      total = diffcore::add(total, rec.total);
    }
    per_traj.push_back(total);
  }
  out.total = diffcore::sum(diffcore::concat(std::span<const Var<T>>(per_traj)));
  return out;
}

template <typename T>
Learner<T>::Learner(AgentConfig agent, LearnerConfig cfg, ParameterSet<T> params)
    : agent_(std::move(agent)), cfg_(cfg), params_(std::move(params)), opt_(cfg.optimizer) {}

template <typename T>
TrainMetrics Learner<T>::train_step(const std::vector<Trajectory<T>>& batch) {
  diffcore::Tape<T> tape;
  tape.set_check_finite(cfg_.check_finite);
  ParamBinding<T> pb(tape, params_);
  BatchLoss<T> bl = batch_loss(pb, agent_, cfg_, batch);
  const double total = static_cast<double>(bl.total.value().item());
  if (!std::isfinite(total)) {
    std::ostringstream os;
    os << "train_step: non-finite loss at params version " << params_.version() << " (rl " << bl.rl << ", aux "
       << bl.aux << ", policy " << bl.policy << ", baseline " << bl.baseline << ", entropy " << bl.entropy << ")";
    throw NumericError(os.str());
  }
  tape.backward(bl.total);
  TrainMetrics m;
  m.grad_norm = opt_.step(params_, pb.gradients());
  m.total_loss = total;
  m.rl_loss = bl.rl;
  m.aux_loss = bl.aux;
  m.params_version = params_.version();
  return m;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw Error("MetricsWriter: cannot open " + path.string());
  out_.precision(10);
  if (fresh) out_ << "step,episode_return,total_loss,rl_loss,aux_loss,grad_norm,params_version\n";
}

void MetricsWriter::append(std::uint64_t step, double episode_return, const TrainMetrics& m) {
  out_ << step << ',' << episode_return << ',' << m.total_loss << ',' << m.rl_loss << ',' << m.aux_loss << ','
       << m.grad_norm << ',' << m.params_version << '\n';
  out_.flush();
}

template <typename T>
double run_episode(const ParameterSet<T>& params, const AgentConfig& cfg, Environment& env, bool greedy,
                   std::mt19937_64& rng, std::size_t max_steps) {
  AgentState<T> state = initial_agent_state<T>(cfg);
  Observation obs = env.reset();
  double ret = 0.0;
  for (std::size_t t = 0; t < max_steps; ++t) {
    ActResult<T> r = act(params, cfg, state, obs);
    StepResult res = env.step(sample_action(std::span<const T>(r.logits), rng, greedy));
    ret += res.reward;
    if (res.done) break;
    obs = std::move(res.observation);
  }
  return ret;
}

#define MRA_LEARNER_INSTANTIATE(T)                                                                          \
  template class Actor<T>;                                                                                 \
  template class Learner<T>;                                                                               \
  template BatchLoss<T> batch_loss<T>(ParamBinding<T>&, const AgentConfig&, const LearnerConfig&,           \
                                      const std::vector<Trajectory<T>>&);                                  \
  template double run_episode<T>(const ParameterSet<T>&, const AgentConfig&, Environment&, bool,            \
                                 std::mt19937_64&, std::size_t);

MRA_LEARNER_INSTANTIATE(float)
MRA_LEARNER_INSTANTIATE(double)

}  // namespace mra::learner
