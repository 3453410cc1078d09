// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "doctest.h"
#include "mra/common/errors.hpp"
#include "mra/diffcore/checkpoint.hpp"
#include "mra/diffcore/gradcheck.hpp"
#include "mra/diffcore/ops.hpp"
#include "mra/diffcore/params.hpp"

using namespace mra;
using namespace mra::diffcore;

namespace {

using TD = Tensor<double>;

TD random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  TD t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

// Reduces any output to a scalar through fixed random weights, so every
// output element contributes a distinct gradient.
Var<double> weighted_sum(Var<double> y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TD w = random_tensor(y.shape(), rng);
  if (y.value().rank() == 0) return mul(y, y.tape->constant(TD::scalar(w[0])));
  return sum(mul(y, y.tape->constant(w)));
}

double check(const std::function<Var<double>(ParamBinding<double>&)>& f, ParameterSet<double>& p) {
  return grad_check<double>(f, p, 1e-5, 1e-4).max_error;
}

}  // namespace

TEST_CASE("matmul examples") {
  Tape<double> tape;
  auto i2 = tape.constant(TD::matrix(2, 2, {1, 0, 0, 1}));
  auto m = tape.constant(TD::matrix(2, 2, {1, 2, 3, 4}));
  CHECK(matmul(i2, m).value() == TD::matrix(2, 2, {1, 2, 3, 4}));
  auto a = tape.constant(TD::matrix(1, 2, {1, 2}));
  auto b = tape.constant(TD::matrix(2, 1, {3, 4}));
  CHECK(matmul(a, b).value().storage() == std::vector<double>{11});
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
  try {
    matmul(a, a);
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[1x2]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient against the hand value") {
  Tape<double> tape;
  auto a = tape.variable(TD::matrix(2, 2, {1, 0, 0, 1}));
  auto b = tape.constant(TD::matrix(2, 2, {2, 3, 4, 5}));
  tape.backward(sum(matmul(a, b)));
  CHECK(tape.grad(a).storage() == std::vector<double>{5, 9, 5, 9});
}

TEST_CASE("stop_gradient examples") {
  Tape<double> tape;
  auto x = tape.variable(TD::vector({1, 2, 3}));
  auto sg = stop_gradient(x);
  CHECK(sg.value() == x.value());
  tape.backward(sum(sg));
  CHECK(tape.grad(x).storage() == std::vector<double>{0, 0, 0});

  Tape<double> t2;
  auto y = t2.variable(TD::vector({1, 1}));
  t2.backward(sum(add(y, stop_gradient(y))));
  CHECK(t2.grad(y).storage() == std::vector<double>{1, 1});

  ParameterSet<double> p;
  p.add("x", TD::vector({1, 1}));
  auto rep = grad_check<double>([](ParamBinding<double>& pb) { return sum(add(pb("x"), stop_gradient(pb("x")))); },
                                p, 1e-5, 1e-4);
  CHECK(rep.passed());
  CHECK(rep.frozen_branches == 1);
}

TEST_CASE("elementwise examples") {
  Tape<double> tape;
  auto z = tape.variable(TD::scalar(0.0));
  CHECK(sigmoid(z).value().item() == 0.5);
  CHECK(tanh(z).value().item() == 0.0);
  tape.backward(sigmoid(z));
  CHECK(tape.grad(z).item() == doctest::Approx(0.25).epsilon(1e-15));
  auto v = tape.constant(TD::vector({1, 2}));
  auto w = tape.constant(TD::vector({1, 2, 3}));
  CHECK_THROWS_AS(add(v, w), DimensionError);
  CHECK(add(v, tape.constant(TD::scalar(1))).value().storage() == std::vector<double>{2, 3});
}

TEST_CASE("softmax_xent examples") {
  Tape<double> tape;
  CHECK(softmax_xent(tape.constant(TD::vector({0.3, 0.3, 0.3, 0.3})), 2).value().item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(softmax_xent(tape.constant(TD::vector({5.0})), 0).value().item() == 0.0);
  CHECK(softmax_xent(tape.constant(TD::vector({2.0, 0.0})), 0).value().item() ==
        doctest::Approx(-std::log(std::exp(2.0) / (std::exp(2.0) + 1.0))).epsilon(1e-14));
  CHECK_THROWS_AS(softmax_xent(tape.constant(TD::vector({1.0, 2.0})), 2), ContractError);
  auto l = tape.variable(TD::vector({0.5, -1.0, 2.0}));
  tape.backward(softmax_xent(l, 1));
  const auto sm = softmax_values<double>(l.value().values());
  CHECK(tape.grad(l)[0] == doctest::Approx(sm[0]).epsilon(1e-14));
  CHECK(tape.grad(l)[1] == doctest::Approx(sm[1] - 1.0).epsilon(1e-14));
  CHECK(tape.grad(l)[2] == doctest::Approx(sm[2]).epsilon(1e-14));
}

TEST_CASE("backward examples") {
  Tape<double> tape;
  auto w = tape.variable(TD::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  tape.backward(sum(w));
  CHECK(tape.grad(w).storage() == std::vector<double>(6, 1.0));

  Tape<double> t2;
  auto v = t2.variable(TD::vector({3, 4}));
  t2.backward(sum(square(v)));
  CHECK(t2.grad(v).storage() == std::vector<double>{6, 8});
  CHECK_THROWS_AS(t2.backward(v), ContractError);

  ParameterSet<double> p;
  p.add("w", TD::vector({3, 4}));
  p.add("unused", TD::vector({1}));
  Tape<double> t3;
  ParamBinding<double> pb(t3, p);
  t3.backward(sum(square(pb("w"))));
  auto g = pb.gradients();
  CHECK(g.at("w").storage() == std::vector<double>{6, 8});
  CHECK(g.at("unused").storage() == std::vector<double>{0});
}

TEST_CASE("grad_check of x squared at 3") {
  ParameterSet<double> p;
  p.add("x", TD::scalar(3.0));
  auto rep = grad_check<double>([](ParamBinding<double>& pb) { return square(pb("x")); }, p, 1e-5, 1e-4);
  CHECK(rep.max_error < 1e-7);
}

TEST_CASE("grad_check rejects a nondeterministic function") {
  ParameterSet<double> p;
  p.add("x", TD::scalar(1.0));
  int calls = 0;
  auto f = [&](ParamBinding<double>& pb) {
    ++calls;
    return scale(pb("x"), static_cast<double>(calls));
  };
  CHECK_THROWS_AS(grad_check<double>(f, p, 1e-5, 1e-4), ContractError);
}

TEST_CASE("every primitive passes randomized finite-difference checks") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  using Fn = std::function<Var<double>(ParamBinding<double>&)>;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
    const std::uint64_t ws = rng();
    ParameterSet<double> p;
    p.add("a", random_tensor({m, k}, rng));
    p.add("b", random_tensor({k, n}, rng));
    p.add("u", random_tensor({k}, rng));
    p.add("v", random_tensor({k}, rng));
    p.add("r", random_tensor({m}, rng));
    p.add("pos", random_tensor({k}, rng, 0.5, 2.0));
    p.add("away", random_tensor({k}, rng, 0.2, 1.0));
    p.add("s", random_tensor({}, rng));
    TD targets = random_tensor({k}, rng, 0.0, 1.0);
    const std::size_t target = rng() % k;
    const std::vector<std::pair<const char*, Fn>> cases = {
        {"sigmoid", [&](auto& pb) { return weighted_sum(sigmoid(pb("u")), ws); }},
        {"tanh", [&](auto& pb) { return weighted_sum(tanh(pb("u")), ws); }},
        {"relu", [&](auto& pb) { return weighted_sum(relu(pb("away")), ws); }},
        {"square", [&](auto& pb) { return weighted_sum(square(pb("u")), ws); }},
        {"exp", [&](auto& pb) { return weighted_sum(exp(pb("u")), ws); }},
        {"log", [&](auto& pb) { return weighted_sum(log(pb("pos")), ws); }},
        {"reciprocal", [&](auto& pb) { return weighted_sum(reciprocal(pb("pos")), ws); }},
        {"add", [&](auto& pb) { return weighted_sum(add(pb("u"), pb("v")), ws); }},
        {"sub", [&](auto& pb) { return weighted_sum(sub(pb("u"), pb("v")), ws); }},
        {"mul", [&](auto& pb) { return weighted_sum(mul(pb("u"), pb("v")), ws); }},
        {"scalar broadcast", [&](auto& pb) { return weighted_sum(mul(pb("s"), pb("u")), ws); }},
        {"scale", [&](auto& pb) { return weighted_sum(scale(pb("u"), 1.7), ws); }},
        {"add_scalar", [&](auto& pb) { return weighted_sum(add_scalar(pb("u"), 0.3), ws); }},
        {"matmul", [&](auto& pb) { return weighted_sum(matmul(pb("a"), pb("b")), ws); }},
        {"matvec", [&](auto& pb) { return weighted_sum(matvec(pb("a"), pb("u")), ws); }},
        {"matvec_t", [&](auto& pb) { return weighted_sum(matvec_t(pb("a"), pb("r")), ws); }},
        {"affine", [&](auto& pb) { return weighted_sum(affine(pb("a"), pb("u"), pb("r")), ws); }},
        {"add_row_bias", [&](auto& pb) { return weighted_sum(add_row_bias(pb("a"), pb("u")), ws); }},
        {"sum", [&](auto& pb) { return weighted_sum(sum(pb("a")), ws); }},
        {"mean", [&](auto& pb) { return weighted_sum(mean(pb("a")), ws); }},
        {"dot", [&](auto& pb) { return weighted_sum(dot(pb("u"), pb("v")), ws); }},
        {"sq_distance", [&](auto& pb) { return weighted_sum(sq_distance(pb("u"), pb("v")), ws); }},
        {"concat", [&](auto& pb) { return weighted_sum(concat({pb("u"), pb("r"), pb("v")}), ws); }},
        {"slice", [&](auto& pb) { return weighted_sum(slice(pb("a"), 0, m * k - (m * k) / 2), ws); }},
        {"reshape", [&](auto& pb) { return weighted_sum(reshape(pb("a"), Shape{k, m}), ws); }},
        {"transpose", [&](auto& pb) { return weighted_sum(transpose(pb("a")), ws); }},
        {"pick", [&](auto& pb) { return weighted_sum(pick(pb("a"), m * k - 1), ws); }},
        {"softmax_xent", [&](auto& pb) { return softmax_xent(pb("u"), target); }},
        {"log_softmax", [&](auto& pb) { return weighted_sum(log_softmax(pb("u")), ws); }},
        {"softmax_entropy", [&](auto& pb) { return softmax_entropy(pb("u")); }},
        {"sigmoid_xent", [&](auto& pb) { return sigmoid_xent(pb("u"), targets); }},
        {"composite",
         [&](auto& pb) {
           auto h = tanh(affine(pb("a"), pb("u"), pb("r")));
           auto g = sigmoid(matvec_t(pb("a"), h));
           return add(sum(mul(g, pb("v"))), softmax_entropy(h));
         }},
    };
    for (const auto& [name, f] : cases) {
      CAPTURE(name);
      CAPTURE(trial);
      ParameterSet<double> copy = p;
      CHECK(check(f, copy) < 1e-4);
    }
  }
}

TEST_CASE("replaying the same computation is bit-identical") {
  std::mt19937_64 rng(5);
  ParameterSet<double> p;
  p.add("a", random_tensor({3, 4}, rng));
  p.add("u", random_tensor({4}, rng));
  auto run = [&] {
    Tape<double> tape;
    ParamBinding<double> pb(tape, p);
    auto y = sum(tanh(matvec(pb("a"), pb("u"))));
    tape.backward(y);
    return std::pair(y.value(), pb.gradients());
  };
  auto [y1, g1] = run();
  auto [y2, g2] = run();
  CHECK(y1 == y2);
  CHECK(g1 == g2);
}

TEST_CASE("stop_gradient is an exact forward identity") {
  std::mt19937_64 rng(6);
  const TD a = random_tensor({3, 3}, rng), u = random_tensor({3}, rng);
  Tape<double> tape;
  auto with = tanh(matvec(stop_gradient(tape.constant(a)), tape.constant(u)));
  auto without = tanh(matvec(tape.constant(a), tape.constant(u)));
  CHECK(with.value() == without.value());
}

TEST_CASE("non-finite values raise when checking is on") {
  Tape<double> tape;
  tape.set_check_finite(true);
  auto x = tape.constant(TD::vector({-1.0}));
  CHECK_THROWS_AS(log(x), NumericError);
}

TEST_CASE("parameter set version and copies") {
  ParameterSet<float> p;
  p.add("w", Tensor<float>(Shape{2}, 1.0f));
  CHECK_THROWS_AS(p.add("w", Tensor<float>(Shape{2})), ContractError);
  ParameterSet<float> snap = p;
  p.at("w")[0] = 3.0f;
  p.bump_version();
  CHECK(snap.at("w")[0] == 1.0f);
  CHECK(p.version() == 1);
  CHECK(snap.version() == 0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  std::mt19937_64 rng(8);
  ParameterSet<double> p;
  p.add("core/w", random_tensor({3, 5}, rng));
  p.add("heads/value_b", random_tensor({1}, rng));
  p.add("scalar", random_tensor({}, rng));
  p.set_version(42);
  const std::string bytes = encode_checkpoint(p);
  CHECK(bytes.substr(0, 4) == "MRA1");
  CHECK(decode_checkpoint<double>(bytes) == p);
  CHECK(encode_checkpoint(decode_checkpoint<double>(bytes)) == bytes);
  CHECK(checkpoint_dtype(bytes) == DType::kFloat64);
  CHECK_THROWS_AS(decode_checkpoint<float>(bytes), ContractError);
  CHECK_THROWS_AS(decode_checkpoint<double>(bytes.substr(0, bytes.size() - 3)), ContractError);
  CHECK_THROWS_AS(decode_checkpoint<double>("XXXX" + bytes.substr(4)), ContractError);

  const auto path = std::filesystem::temp_directory_path() / "mra_ckpt_test.mra";
  ParameterSet<float> pf;
  pf.add("a", Tensor<float>(Shape{2, 2}, std::vector<float>{1.5f, -2.0f, 3.25f, 1e-7f}));
  pf.set_version(7);
  save_checkpoint(path, pf);
  CHECK(load_checkpoint<float>(path) == pf);
  std::filesystem::remove(path);
}
