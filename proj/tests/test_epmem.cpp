// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "mra/common/errors.hpp"
#include "mra/epmem/episodic_memory.hpp"
#include "oracles.hpp"

using namespace mra;
using namespace mra::diffcore;
using namespace mra::epmem;

namespace {

using TD = Tensor<double>;

TD random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  TD t(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

oracle::Vec vec(const TD& t) { return {t.storage().begin(), t.storage().end()}; }

oracle::Mat mat(const TD& t) {
  oracle::Mat m(t.dim(0));
  for (std::size_t r = 0; r < t.dim(0); ++r) m[r].assign(t.data() + r * t.dim(1), t.data() + (r + 1) * t.dim(1));
  return m;
}

struct Mirror {
  EpisodicBuffer<double> buffer;
  std::vector<oracle::Slot> slots;
  std::size_t writes = 0;
};

void write_both(Mirror& mi, const TD& x, const TD& h, const TD& wk, const TD& bk, std::int64_t step) {
  Tape<double> tape;
  const std::size_t idx = write(mi.buffer, tape.constant(x), tape.constant(h), tape.constant(wk), tape.constant(bk), step).index;
  const std::size_t expect = mi.writes % mi.buffer.capacity();
  CHECK(idx == expect);
  oracle::Slot s{vec(x), vec(h), oracle::affine(mat(wk), oracle::cat(vec(x), vec(h)), vec(bk)), step};
  if (mi.slots.size() <= idx) mi.slots.resize(idx + 1);
  mi.slots[idx] = s;
  ++mi.writes;
}

void compare_read(const Mirror& mi, const TD& q, std::size_t K, const TD& wk, const TD& bk, double eps) {
  Tape<double> tape;
  auto r = read(mi.buffer, tape.constant(q), K, tape.constant(wk), tape.constant(bk), eps);
  auto o = oracle::linear_scan_read(mi.slots, vec(q), K, mat(wk), vec(bk), eps, mi.buffer.hidden_size());
  REQUIRE(r.neighbors == o.neighbors);
  for (std::size_t j = 0; j < o.weights.size(); ++j) CHECK(std::abs(r.weights[j] - o.weights[j]) <= 1e-10);
  for (std::size_t i = 0; i < o.m.size(); ++i) CHECK(std::abs(r.m.value()[i] - o.m[i]) <= 1e-10);
  if (!r.weights.empty()) {
    double s = 0.0;
    for (double w : r.weights) s += w;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

}  // namespace

TEST_CASE("FIFO overwrite and reset") {
  EpisodicBuffer<double> b(2, 1, 1);
  auto slot = [](double x) {
    MemorySlot<double> s;
    s.p = TD::vector({x});
    s.v = TD::vector({x});
    s.k = TD::vector({x});
    return s;
  };
  CHECK(b.store(slot(1)) == 0);
  CHECK(b.store(slot(2)) == 1);
  CHECK(b.store(slot(3)) == 0);
  CHECK(b.count() == 2);
  CHECK(b.slot(0).p[0] == 3);
  CHECK(b.slot(1).p[0] == 2);
  b.reset();
  CHECK(b.count() == 0);
  CHECK(b.next_index() == 0);
  b.store(slot(9));
  CHECK(b.count() == 1);

  EpisodicBuffer<double> c(4, 1, 1);
  for (int i = 0; i < 9; ++i) c.store(slot(i));
  c.reset();
  for (int i = 0; i < 3; ++i) c.store(slot(100 + i));
  CHECK(c.count() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.slot(i).p[0] == 100 + static_cast<double>(i));
}

TEST_CASE("cached key with zero weights equals the bias") {
  EpisodicBuffer<double> b(4, 2, 3);
  Tape<double> tape;
  auto wk = tape.constant(TD(Shape{2, 5}));
  auto bk = tape.constant(TD::vector({0.5, -1.5}));
  write(b, tape.constant(TD::vector({1, 2})), tape.constant(TD::vector({3, 4, 5})), wk, bk, 0);
  write(b, tape.constant(TD::vector({-1, 7})), tape.constant(TD::vector({0, 1, 0})), wk, bk, 1);
  for (std::size_t i = 0; i < 2; ++i) CHECK(b.slot(i).k.storage() == std::vector<double>{0.5, -1.5});
  CHECK_THROWS_AS(write(b, tape.constant(TD::vector({1})), tape.constant(TD::vector({3, 4, 5})), wk, bk, 2),
                  DimensionError);
}

TEST_CASE("query is an affine map of x and the previous hidden state") {
  Tape<double> tape;
  auto q = query(tape.constant(TD::vector({1, 2})), tape.constant(TD::vector({3})), tape.constant(TD(Shape{2, 3})),
                 tape.constant(TD::vector({0.25, -4})));
  CHECK(q.value().storage() == std::vector<double>{0.25, -4});
  TD eye(Shape{3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  auto q2 = query(tape.constant(TD::vector({1, 2})), tape.constant(TD::vector({3})), tape.constant(eye),
                  tape.constant(TD(Shape{3})));
  CHECK(q2.value().storage() == std::vector<double>{1, 2, 3});
}

TEST_CASE("read examples") {
  Tape<double> tape;
  auto wk = tape.constant(TD::matrix(1, 2, {1, 0}));
  auto bk = tape.constant(TD::vector({0}));
  EpisodicBuffer<double> empty(4, 1, 1);
  auto r0 = read(empty, tape.constant(TD::vector({0})), 3, wk, bk, 1e-3);
  CHECK(r0.neighbors.empty());
  CHECK(r0.m.value().storage() == std::vector<double>{0});
  CHECK_THROWS_AS(read(empty, tape.constant(TD::vector({0})), 3, wk, bk, 0.0), ContractError);

  EpisodicBuffer<double> one(4, 1, 1);
  write(one, tape.constant(TD::vector({2})), tape.constant(TD::vector({7})), wk, bk, 0);
  auto r1 = read(one, tape.constant(TD::vector({2})), 3, wk, bk, 1e-3);
  CHECK(r1.weights == std::vector<double>{1.0});
  CHECK(r1.m.value().storage() == std::vector<double>{7});

  EpisodicBuffer<double> two(4, 1, 1);
  write(two, tape.constant(TD::vector({1})), tape.constant(TD::vector({2})), wk, bk, 0);
  write(two, tape.constant(TD::vector({-1})), tape.constant(TD::vector({4})), wk, bk, 1);
  auto r2 = read(two, tape.constant(TD::vector({0})), 2, wk, bk, 1e-3);
  CHECK(r2.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r2.m.value()[0] == doctest::Approx(3.0).epsilon(1e-14));

  EpisodicBuffer<double> far(4, 1, 1);
  write(far, tape.constant(TD::vector({1})), tape.constant(TD::vector({1})), wk, bk, 0);
  write(far, tape.constant(TD::vector({std::sqrt(3.0)})), tape.constant(TD::vector({0})), wk, bk, 1);
  auto r3 = read(far, tape.constant(TD::vector({0})), 2, wk, bk, 1e-3);
  const double a = 1.0 / 1.001, b = 1.0 / 3.001;
  CHECK(r3.weights[0] == doctest::Approx(a / (a + b)).epsilon(1e-12));
  CHECK(r3.weights[0] == doctest::Approx(0.74994).epsilon(1e-3));
  CHECK(r3.weights[1] == doctest::Approx(0.25006).epsilon(1e-3));
}

TEST_CASE("ties go to the older write") {
  Tape<double> tape;
  auto wk = tape.constant(TD::matrix(1, 2, {1, 0}));
  auto bk = tape.constant(TD::vector({0}));
  EpisodicBuffer<double> b(3, 1, 1);
  for (int i = 0; i < 5; ++i) write(b, tape.constant(TD::vector({1})), tape.constant(TD::vector({double(i)})), wk, bk, i);
  // Slots hold writes 3, 4, 2 at indices 0, 1, 2.
  const std::vector<double> q{1.0};
  CHECK(select_neighbors(b, std::span<const double>(q), 2) == std::vector<std::size_t>{2, 0});
}

TEST_CASE("1000 randomized reads match the linear-scan oracle") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> cap_d(1, 12), dim_d(1, 4), k_d(1, 6), writes_d(0, 30);
  int reads = 0;
  while (reads < 1000) {
    const std::size_t C = cap_d(rng), E = dim_d(rng), H = dim_d(rng), key = dim_d(rng);
    Mirror mi{EpisodicBuffer<double>(C, E, H), {}, 0};
    TD wk = random_tensor({key, E + H}, rng), bk = random_tensor({key}, rng);
    const std::size_t n = writes_d(rng);
    for (std::size_t t = 0; t < n; ++t) write_both(mi, random_tensor({E}, rng), random_tensor({H}, rng), wk, bk, static_cast<std::int64_t>(t));
    for (int r = 0; r < 5; ++r, ++reads) compare_read(mi, random_tensor({key}, rng, 1.5), k_d(rng), wk, bk, 1e-3);
    // Parameter update: cached keys stay, weights use the new projection.
    TD wk2 = wk;
    for (double& v : wk2.storage()) v += std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    for (int r = 0; r < 5; ++r, ++reads) compare_read(mi, random_tensor({key}, rng, 1.5), k_d(rng), wk2, bk, 1e-3);
  }
}

TEST_CASE("staleness: an update changes weights but not selection") {
  std::mt19937_64 rng(4);
  Mirror mi{EpisodicBuffer<double>(8, 2, 2), {}, 0};
  TD wk = random_tensor({3, 4}, rng), bk = random_tensor({3}, rng);
  for (int t = 0; t < 8; ++t) write_both(mi, random_tensor({2}, rng), random_tensor({2}, rng), wk, bk, t);
  const TD q = random_tensor({3}, rng);
  Tape<double> tape;
  auto before = read(mi.buffer, tape.constant(q), 4, tape.constant(wk), tape.constant(bk), 1e-3);
  TD wk2 = wk;
  for (double& v : wk2.storage()) v *= -1.0;
  auto after = read(mi.buffer, tape.constant(q), 4, tape.constant(wk2), tape.constant(bk), 1e-3);
  CHECK(before.neighbors == after.neighbors);
  CHECK(before.weights != after.weights);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(mi.buffer.slot(i).k[j] - mi.slots[i].k[j]) <= 1e-12);
  }
}

TEST_CASE("jumpy contract at the memory level") {
  std::mt19937_64 rng(12);
  const std::size_t E = 3, H = 2, key = 3;
  TD wk = random_tensor({key, E + H}, rng), bk = random_tensor({key}, rng);
  TD wq = random_tensor({key, E + H}, rng), bq = random_tensor({key}, rng);
  for (WriteMode mode : {WriteMode::kDetached, WriteMode::kLinked}) {
    Tape<double> tape;
    EpisodicBuffer<double> b(8, E, H);
    auto vwk = tape.variable(wk), vbk = tape.variable(bk), vwq = tape.variable(wq), vbq = tape.variable(bq);
    std::vector<Var<double>> xs, hs;
    for (int t = 0; t < 4; ++t) {
      xs.push_back(tape.variable(random_tensor({E}, rng)));
      hs.push_back(tape.variable(random_tensor({H}, rng)));
      write(b, xs.back(), hs.back(), vwk, vbk, t, mode);
    }
    auto q = query(tape.constant(random_tensor({E}, rng)), tape.constant(random_tensor({H}, rng)), vwq, vbq);
    auto r = read(b, q, 3, vwk, vbk, 1e-3);
    tape.backward(sum(square(r.m)));
    double producer = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const TD gx = tape.grad(xs[i]), gh = tape.grad(hs[i]);
      for (double g : gx.storage()) producer += std::abs(g);
      for (double g : gh.storage()) producer += std::abs(g);
    }
    auto nz = [&](Var<double> v) {
      const TD gv = tape.grad(v);
      double s = 0.0;
      for (double g : gv.storage()) s += std::abs(g);
      return s > 0.0;
    };
    CHECK(nz(vwk));
    CHECK(nz(vbk));
    CHECK(nz(vwq));
    CHECK(nz(vbq));
    if (mode == WriteMode::kDetached) {
      CHECK(producer == 0.0);
    } else {
      CHECK(producer > 0.0);
    }
  }
}

TEST_CASE("write key gradient reaches only the projection") {
  std::mt19937_64 rng(13);
  Tape<double> tape;
  EpisodicBuffer<double> b(2, 2, 2);
  auto x = tape.variable(random_tensor({2}, rng));
  auto h = tape.variable(random_tensor({2}, rng));
  auto wk = tape.variable(random_tensor({2, 4}, rng));
  auto bk = tape.variable(random_tensor({2}, rng));
  auto w = write(b, x, h, wk, bk, 0);
  tape.backward(sum(square(w.key)));
  CHECK(tape.grad(x).storage() == std::vector<double>{0, 0});
  CHECK(tape.grad(h).storage() == std::vector<double>{0, 0});
  const TD gw = tape.grad(wk);
  double s = 0.0;
  for (double g : gw.storage()) s += std::abs(g);
  CHECK(s > 0.0);
}

TEST_CASE("memory trace csv") {
  MemoryTrace tr;
  tr.record(0, 0, {}, {});
  tr.record(1, 1, {0, 2}, {0.75, 0.25});
  const std::string csv = tr.to_csv();
  CHECK(csv.find("step,write_index,neighbor_indices,weights") == 0);
  CHECK(csv.find("1,1,0;2,0.75;0.25") != std::string::npos);
  CHECK(tr.rows() == 2);
}

TEST_CASE("default capacities") {
  CHECK(default_memory_config(true).capacity == 2048);
  CHECK(default_memory_config(false).capacity == 1024);
  CHECK(default_memory_config(false).neighbors == 10);
  CHECK(default_memory_config(false).key_size == 128);
}
