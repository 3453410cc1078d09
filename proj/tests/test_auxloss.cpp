// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "mra/auxloss/auxloss.hpp"
#include "mra/common/errors.hpp"
#include "mra/diffcore/gradcheck.hpp"
#include "oracles.hpp"

using namespace mra;
using namespace mra::diffcore;
using namespace mra::auxloss;

namespace {

using TD = Tensor<double>;

TD random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  TD t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

// Every (t, k, candidate) spelled out: candidates for step k are x_k..x_{T-1},
// the positive is x_{t+k}, logits are x_j^T W_k h_t.
double cpc_brute_force(const std::vector<TD>& h, const std::vector<TD>& x, const std::vector<TD>& w, double weight) {
  const std::size_t T = h.size(), E = x[0].size(), H = h[0].size();
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t k = 1; k <= w.size(); ++k) {
    for (std::size_t t = 0; t + k < T; ++t) {
      std::vector<double> logits;
      for (std::size_t j = k; j < T; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < E; ++a)
          for (std::size_t b = 0; b < H; ++b) s += x[j][a] * w[k - 1].at(a, b) * h[t][b];
        logits.push_back(s);
      }
      const auto p = oracle::softmax(logits);
      total += -std::log(p[t]);
      ++pairs;
    }
  }
  return weight * total / static_cast<double>(pairs);
}

double rec_brute_force(const ParameterSet<double>& p, const std::vector<TD>& h, const RecTargets& tg,
                       const std::vector<TD>& obs, const RecConfig& cfg) {
  auto lin = [](const TD& w, const TD& b, const std::vector<double>& x) {
    std::vector<double> y(w.dim(0));
    for (std::size_t r = 0; r < w.dim(0); ++r) {
      y[r] = b[r];
      for (std::size_t c = 0; c < w.dim(1); ++c) y[r] += w.at(r, c) * x[c];
    }
    return y;
  };
  double lr = 0, la = 0, li = 0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    const std::vector<double> ht(h[t].storage());
    const double r = lin(p.at("rec/reward_w"), p.at("rec/reward_b"), ht)[0];
    lr += 0.5 * (r - tg.prev_rewards[t]) * (r - tg.prev_rewards[t]);
    const auto a = lin(p.at("rec/action_w"), p.at("rec/action_b"), ht);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double target = static_cast<int>(i) == tg.prev_actions[t] ? 1.0 : 0.0;
      la += 0.5 * (a[i] - target) * (a[i] - target);
    }
    auto z = lin(p.at("rec/dec_w1"), p.at("rec/dec_b1"), ht);
    for (double& v : z) v = std::max(0.0, v);
    const auto logits = lin(p.at("rec/dec_w2"), p.at("rec/dec_b2"), z);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-logits[i])), y = obs[t][i];
      li += -y * std::log(s) - (1.0 - y) * std::log(1.0 - s);
    }
  }
  return cfg.c_image * li + cfg.c_action * la + cfg.c_reward * lr;
}

struct CpcCase {
  ParameterSet<double> p;
  std::vector<TD> h, x;
  CpcConfig cfg;
};

CpcCase cpc_case(std::size_t T, std::size_t N, std::uint64_t seed) {
  CpcCase c;
  c.cfg.steps = N;
  c.cfg.weight = 1.7;
  Rng rng(seed);
  init_cpc_params(c.p, c.cfg, 3, 4, rng);
  for (std::size_t t = 0; t < T; ++t) {
    c.h.push_back(random_tensor({4}, rng));
    c.x.push_back(random_tensor({3}, rng));
  }
  return c;
}

double cpc_value(CpcCase& c) {
  Tape<double> tape;
  ParamBinding<double> pb(tape, c.p);
  std::vector<Var<double>> hs, xs;
  for (const auto& t : c.h) hs.push_back(tape.constant(t));
  for (const auto& t : c.x) xs.push_back(tape.constant(t));
  return cpc_loss(pb, hs, xs, c.cfg).value().item();
}

}  // namespace

TEST_CASE("cpc_score examples") {
  Tape<double> tape;
  auto x = tape.constant(TD::vector({1, 0}));
  auto h = tape.constant(TD::vector({1, 0}));
  CHECK(cpc_score(x, h, tape.constant(TD(Shape{2, 2}))).value().item() == 1.0);
  CHECK(cpc_score(x, h, tape.constant(TD::matrix(2, 2, {1, 0, 0, 1}))).value().item() ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  auto w = TD::matrix(2, 3, {0.1, -0.2, 0.3, 0.4, 0.5, -0.6});
  auto xv = TD::vector({0.7, -1.1});
  auto hv = TD::vector({0.2, 0.9, -0.4});
  double bil = 0;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b) bil += xv[a] * w.at(a, b) * hv[b];
  CHECK(cpc_score(tape.constant(xv), tape.constant(hv), tape.constant(w)).value().item() ==
        doctest::Approx(std::exp(bil)).epsilon(1e-14));
}

TEST_CASE("cpc loss matches the brute-force enumeration") {
  for (std::size_t T = 2; T <= 6; ++T) {
    for (std::size_t N = 1; N <= std::min<std::size_t>(3, T - 1); ++N) {
      auto c = cpc_case(T, N, 100 * T + N);
      std::vector<TD> w;
      for (std::size_t k = 1; k <= N; ++k) w.push_back(c.p.at(cpc_param_id(k)));
      CHECK(std::abs(cpc_value(c) - cpc_brute_force(c.h, c.x, w, c.cfg.weight)) <= 1e-10);
    }
  }
}

TEST_CASE("cpc loss with zero matrices is log of the candidate count") {
  auto c = cpc_case(5, 1, 3);
  c.cfg.weight = 1.0;
  for (auto& [id, t] : c.p) t.fill(0.0);
  // Pairs t = 0..3 each see 4 candidates.
  CHECK(cpc_value(c) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  auto d = cpc_case(2, 1, 3);
  CHECK(cpc_value(d) == 0.0);
}

TEST_CASE("cpc loss is nonnegative and vanishes for a dominant positive") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = cpc_case(6, 3, rng());
    CHECK(cpc_value(c) >= 0.0);
  }
  CpcCase c;
  c.cfg.steps = 1;
  c.cfg.weight = 1.0;
  c.p.add(cpc_param_id(1), TD::matrix(3, 3, {50, 0, 0, 0, 50, 0, 0, 0, 50}));
  c.x = {TD::vector({1, 0, 0}), TD::vector({0, 1, 0}), TD::vector({0, 0, 1})};
  c.h = {c.x[1], c.x[2], c.x[0]};
  CHECK(cpc_value(c) < 1e-20);
}

TEST_CASE("cpc argument errors") {
  auto c = cpc_case(3, 2, 1);
  Tape<double> tape;
  ParamBinding<double> pb(tape, c.p);
  std::vector<Var<double>> one{tape.constant(c.h[0])}, onex{tape.constant(c.x[0])};
  CHECK_THROWS_AS(cpc_loss(pb, one, onex, c.cfg), ContractError);
  CpcConfig too_many = c.cfg;
  too_many.steps = 3;
  std::vector<Var<double>> hs, xs;
  for (std::size_t t = 0; t < 3; ++t) {
    hs.push_back(tape.constant(c.h[t]));
    xs.push_back(tape.constant(c.x[t]));
  }
  CHECK_THROWS_AS(cpc_loss(pb, hs, xs, too_many), ContractError);
}

TEST_CASE("cpc gradients reach h and W but not the targets") {
  auto c = cpc_case(6, 3, 5);
  ParameterSet<double> p = c.p;
  for (std::size_t t = 0; t < 6; ++t) {
    p.add("h" + std::to_string(t), c.h[t]);
    p.add("x" + std::to_string(t), c.x[t]);
  }
  auto f = [&](ParamBinding<double>& pb) {
    std::vector<Var<double>> hs, xs;
    for (std::size_t t = 0; t < 6; ++t) {
      hs.push_back(pb("h" + std::to_string(t)));
      xs.push_back(pb("x" + std::to_string(t)));
    }
    return cpc_loss(pb, hs, xs, c.cfg);
  };
  CHECK(grad_check<double>(f, p, 1e-5, 1e-4).passed());
  Tape<double> tape;
  ParamBinding<double> pb(tape, p);
  tape.backward(f(pb));
  const auto g = pb.gradients();
  for (std::size_t t = 0; t < 6; ++t) CHECK(g.at("x" + std::to_string(t)) == TD(Shape{3}));
  double s = 0;
  for (double v : g.at("h0").storage()) s += std::abs(v);
  CHECK(s > 0);
}

TEST_CASE("rec loss matches the brute-force sum") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    ParameterSet<double> p;
    Rng r(rng());
    init_rec_params(p, 4, 3, 5, 6, r);
    RecConfig cfg{1.5, 0.7, 2.0};
    std::vector<TD> h, obs;
    RecTargets tg;
    tg.num_actions = 3;
    for (std::size_t t = 0; t < 4; ++t) {
      h.push_back(random_tensor({4}, rng));
      obs.push_back(random_tensor({5}, rng, 0.0, 1.0));
      tg.prev_rewards.push_back(std::uniform_real_distribution<double>(-1, 1)(rng));
      tg.prev_actions.push_back(static_cast<int>(rng() % 4) - 1);
    }
    Tape<double> tape;
    ParamBinding<double> pb(tape, p);
    std::vector<Var<double>> hs;
    for (const auto& t : h) hs.push_back(tape.constant(t));
    const double got = rec_loss(pb, hs, tg, obs, cfg).total.value().item();
    CHECK(std::abs(got - rec_brute_force(p, h, tg, obs, cfg)) <= 1e-10);
  }
}

TEST_CASE("rec loss examples") {
  ParameterSet<double> p;
  Rng r(1);
  init_rec_params(p, 2, 3, 4, 3, r);
  for (auto& [id, t] : p) t.fill(0.0);
  Tape<double> tape;
  ParamBinding<double> pb(tape, p);
  RecTargets tg{{2.0}, {-1}, 3};
  std::vector<Var<double>> hs{tape.constant(TD::vector({0.3, -0.4}))};
  auto out = rec_loss(pb, hs, tg, {TD(Shape{4}, 0.5)}, RecConfig{});
  CHECK(out.reward.value().item() == 2.0);
  CHECK(out.action.value().item() == 0.0);
  CHECK(out.image.value().item() == doctest::Approx(4 * std::log(2.0)).epsilon(1e-14));

  // Decoder outputs equal to binary targets reach the entropy floor of 0.
  p.at("rec/dec_b2") = TD::vector({60, -60, 60, -60});
  Tape<double> t2;
  ParamBinding<double> pb2(t2, p);
  std::vector<Var<double>> hs2{t2.constant(TD::vector({0.3, -0.4}))};
  auto sat = rec_loss(pb2, hs2, RecTargets{{0.0}, {-1}, 3}, {TD::vector({1, 0, 1, 0})}, RecConfig{});
  CHECK(sat.total.value().item() < 1e-20);
}

TEST_CASE("rec gradients match finite differences") {
  std::mt19937_64 rng(31);
  ParameterSet<double> p;
  Rng r(2);
  init_rec_params(p, 4, 3, 5, 6, r);
  std::vector<TD> obs;
  for (std::size_t t = 0; t < 3; ++t) {
    p.add("h" + std::to_string(t), random_tensor({4}, rng));
    obs.push_back(random_tensor({5}, rng, 0.0, 1.0));
  }
  RecTargets tg{{0.5, -1.0, 0.0}, {2, -1, 0}, 3};
  auto f = [&](ParamBinding<double>& pb) {
    std::vector<Var<double>> hs;
    for (std::size_t t = 0; t < 3; ++t) hs.push_back(pb("h" + std::to_string(t)));
    return rec_loss(pb, hs, tg, obs, RecConfig{3.0, 1.0, 1.0}).total;
  };
  CHECK(grad_check<double>(f, p, 1e-5, 1e-4).passed());
}
