// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "mra/common/errors.hpp"
#include "mra/controller/controller.hpp"
#include "mra/diffcore/gradcheck.hpp"
#include "mra/learner/agent.hpp"

using namespace mra;
using namespace mra::diffcore;
using namespace mra::controller;

namespace {

using TD = Tensor<double>;

ControllerConfig small_config(CoreKind core, bool mem) {
  ControllerConfig c;
  c.core = core;
  c.mem = mem;
  c.obs = ObservationSpec::vector(6);
  c.num_actions = 5;
  c.embed = 4;
  c.hidden = 3;
  c.encoder_hidden = 5;
  return c;
}

ParameterSet<double> make_params(const ControllerConfig& cfg, std::uint64_t seed) {
  ParameterSet<double> p;
  Rng rng(seed);
  init_controller_params(p, cfg, rng);
  return p;
}

void zero(ParameterSet<double>& p) {
  for (auto& [id, t] : p) t.fill(0.0);
}

TD random_tensor(Shape shape, std::mt19937_64& rng) {
  TD t(std::move(shape));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("zero parameters give zero outputs") {
  for (CoreKind core : {CoreKind::kLstm, CoreKind::kFeedForward}) {
    const auto cfg = small_config(core, true);
    auto p = make_params(cfg, 1);
    zero(p);
    Tape<double> tape;
    ParamBinding<double> pb(tape, p);
    auto x = encode(pb, cfg, tape.constant(TD(Shape{6})));
    CHECK(x.value() == TD(Shape{4}));
    auto m = tape.constant(TD::vector({1, 2, 3}));
    if (core == CoreKind::kLstm) {
      auto s = lstm_step(pb, x, std::optional(m), {tape.constant(TD(Shape{3})), tape.constant(TD(Shape{3}))});
      CHECK(s.h.value() == TD(Shape{3}));
      CHECK(s.c.value() == TD(Shape{3}));
    } else {
      CHECK(ff_step(pb, x, std::optional(m)).value() == TD(Shape{3}));
    }
    auto out = heads(pb, tape.constant(TD::vector({0.3, -0.2, 0.9})));
    CHECK(out.logits.value() == TD(Shape{5}));
    CHECK(out.value.value().item() == 0.0);
    CHECK(softmax_entropy(out.logits).value().item() == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  }
}

TEST_CASE("saturated forget gate keeps the cell") {
  const auto cfg = small_config(CoreKind::kLstm, false);
  auto p = make_params(cfg, 2);
  zero(p);
  for (std::size_t i = 3; i < 6; ++i) p.at("core/b")[i] = 50.0;
  Tape<double> tape;
  ParamBinding<double> pb(tape, p);
  auto s = lstm_step(pb, tape.constant(TD::vector({1, 2, 3, 4})), std::optional<Var<double>>(),
                     {tape.constant(TD(Shape{3})), tape.constant(TD::vector({0.7, -1.2, 2.5}))});
  CHECK(std::abs(s.c.value()[0] - 0.7) < 1e-9);
  CHECK(std::abs(s.c.value()[1] + 1.2) < 1e-9);
  CHECK(std::abs(s.c.value()[2] - 2.5) < 1e-9);
}

TEST_CASE("distinct one-hot observations embed distinctly") {
  const auto cfg = small_config(CoreKind::kLstm, false);
  const auto p = make_params(cfg, 3);
  std::vector<TD> embeds;
  for (std::size_t i = 0; i < 6; ++i) {
    TD o(Shape{6});
    o[i] = 1.0;
    Tape<double> tape;
    ParamBinding<double> pb(tape, p, false);
    embeds.push_back(encode(pb, cfg, tape.constant(o)).value());
  }
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) CHECK(embeds[i] != embeds[j]);
}

TEST_CASE("observation shape mismatch is an error") {
  const auto cfg = small_config(CoreKind::kLstm, false);
  const auto p = make_params(cfg, 3);
  Tape<double> tape;
  ParamBinding<double> pb(tape, p);
  CHECK_THROWS_AS(encode(pb, cfg, tape.constant(TD(Shape{7}))), DimensionError);
}

TEST_CASE("controller gradients match finite differences") {
  std::mt19937_64 rng(9);
  for (CoreKind core : {CoreKind::kLstm, CoreKind::kFeedForward}) {
    const auto cfg = small_config(core, true);
    auto p = make_params(cfg, 4);
    const TD obs = random_tensor({6}, rng), m = random_tensor({3}, rng), h0 = random_tensor({3}, rng),
             c0 = random_tensor({3}, rng);
    auto f = [&](ParamBinding<double>& pb) {
      auto& tape = pb.tape();
      auto x = encode(pb, cfg, tape.constant(obs));
      Var<double> h = core == CoreKind::kLstm
                          ? lstm_step(pb, x, std::optional(tape.constant(m)), {tape.constant(h0), tape.constant(c0)}).h
                          : ff_step(pb, x, std::optional(tape.constant(m)));
      auto out = heads(pb, h);
      return add(add(sum(h), sum(square(x))), add(softmax_xent(out.logits, 2), out.value));
    };
    CHECK(grad_check<double>(f, p, 1e-5, 1e-4).passed());
  }
}

TEST_CASE("grid encoder gradients match finite differences") {
  ControllerConfig cfg = small_config(CoreKind::kLstm, false);
  cfg.obs = ObservationSpec::grid(5, 5, 2);
  cfg.conv_channels = 2;
  auto p = make_params(cfg, 5);
  std::mt19937_64 rng(10);
  // Nonzero biases keep pre-activations off the relu kink.
  for (std::string id : {"encoder/conv1_b", "encoder/conv2_b"}) p.at(id) = random_tensor({2}, rng);
  TD obs(Shape{50});
  for (double& v : obs.storage()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  auto f = [&](ParamBinding<double>& pb) { return sum(square(encode(pb, cfg, pb.tape().constant(obs)))); };
  auto rep = grad_check<double>(f, p, 1e-5, 1e-4);
  CAPTURE(rep.max_error);
  CAPTURE(rep.worst_param);
  CHECK(rep.passed());
}

TEST_CASE("core input width and parameter ids follow the configuration") {
  auto with = small_config(CoreKind::kLstm, true), without = small_config(CoreKind::kLstm, false);
  CHECK(core_input_width(with) == 7);
  CHECK(core_input_width(without) == 4);
  CHECK(make_params(with, 1).at("core/w").shape() == Shape{12, 10});
  auto ff = make_params(small_config(CoreKind::kFeedForward, false), 1);
  CHECK(ff.contains("core/w1"));
  CHECK(!ff.contains("core/w"));
  for (const auto& id : ff.ids()) {
    const bool ok = id.rfind("encoder/", 0) == 0 || id.rfind("core/", 0) == 0 || id.rfind("heads/", 0) == 0;
    CHECK(ok);
  }
}

TEST_CASE("agent state resets to zeros and steps deterministically") {
  learner::AgentConfig cfg;
  cfg.ctrl = small_config(CoreKind::kLstm, true);
  cfg.mem.capacity = 16;
  cfg.mem.key_size = 4;
  cfg.mem.neighbors = 3;
  const auto params = learner::init_agent_params<double>(cfg, 6);
  auto run = [&] {
    auto s = learner::initial_agent_state<double>(cfg);
    CHECK(s.h == TD(Shape{3}));
    CHECK(s.c == TD(Shape{3}));
    CHECK(s.memory.count() == 0);
    std::vector<std::vector<double>> logits;
    for (int t = 0; t < 6; ++t) {
      Observation o(6, 0.0f);
      o[static_cast<std::size_t>(t)] = 1.0f;
      logits.push_back(learner::act(params, cfg, s, o).logits);
    }
    CHECK(s.memory.count() == 6);
    return logits;
  };
  CHECK(run() == run());
}

TEST_CASE("a read sends gradient to the query parameters") {
  learner::AgentConfig cfg;
  cfg.ctrl = small_config(CoreKind::kLstm, true);
  cfg.mem.capacity = 16;
  cfg.mem.key_size = 4;
  cfg.mem.neighbors = 3;
  auto params = learner::init_agent_params<double>(cfg, 7);
  auto state = learner::initial_agent_state<double>(cfg);
  for (int t = 0; t < 4; ++t) learner::act(params, cfg, state, Observation(6, 0.25f * static_cast<float>(t)));
  Tape<double> tape;
  ParamBinding<double> pb(tape, params);
  auto mem = state.memory;
  auto out = learner::agent_step(pb, cfg, tape.constant(TD(Shape{6}, 0.5)), tape.constant(state.h),
                                 tape.constant(state.c), mem, state.step, epmem::WriteMode::kDetached);
  CHECK(!out.neighbors.empty());
  tape.backward(add(sum(out.logits), out.value));
  const auto g = pb.gradients();
  for (std::string id : {"mem/query_w", "mem/query_b", "mem/key_w", "mem/key_b"}) {
    double s = 0.0;
    for (double v : g.at(id).storage()) s += std::abs(v);
    CAPTURE(id);
    CHECK(s > 0.0);
  }
}
