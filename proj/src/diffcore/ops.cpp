// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mra/common/errors.hpp"
#include "mra/simd/kernels.hpp"

namespace mra::diffcore {
namespace {

template <typename T>
Tape<T>& same_tape(Var<T> a, Var<T> b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw ContractError(std::string(op) + ": operands live on different tapes");
  }
  return *a.tape;
}

template <typename T>
Tape<T>& tape_of(Var<T> a, const char* op) {
  if (a.tape == nullptr) throw ContractError(std::string(op) + ": invalid variable");
  return *a.tape;
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(s));
  }
}

template <typename T>
T stable_sigmoid(T z) {
  if (z >= 0) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var<T> elementwise(UnaryKind kind, Var<T> x) {
  Tape<T>& tape = tape_of(x, "elementwise");
  const Tensor<T>& in = x.value();
  Tensor<T> out(in.shape());
  const std::size_t n = in.size();
  const char* name = "unary";
  switch (kind) {
    case UnaryKind::kSigmoid:
      name = "sigmoid";
      for (std::size_t i = 0; i < n; ++i) out[i] = stable_sigmoid(in[i]);
      break;
    case UnaryKind::kTanh:
      name = "tanh";
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
      break;
    case UnaryKind::kRelu:
      name = "relu";
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
      break;
    case UnaryKind::kSquare:
      name = "square";
      simd::mul(in.data(), in.data(), out.data(), n);
      break;
    case UnaryKind::kExp:
      name = "exp";
      for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
      break;
    case UnaryKind::kLog:
      name = "log";
      for (std::size_t i = 0; i < n; ++i) out[i] = std::log(in[i]);
      break;
    case UnaryKind::kReciprocal:
      name = "reciprocal";
      for (std::size_t i = 0; i < n; ++i) out[i] = T(1) / in[i];
      break;
  }
  const std::uint32_t xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [kind, xi](Tape<T>& t, std::uint32_t self) {
        if (!t.requires_grad(xi)) return;
        const Tensor<T>& g = t.grad_mut(self);
        const Tensor<T>& y = t.value(self);
        const Tensor<T>& xv = t.value(xi);
        Tensor<T>& gx = t.grad_mut(xi);
        const std::size_t m = g.size();
        switch (kind) {
          case UnaryKind::kSigmoid:
            for (std::size_t i = 0; i < m; ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
            break;
          case UnaryKind::kTanh:
            for (std::size_t i = 0; i < m; ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
            break;
          case UnaryKind::kRelu:
            for (std::size_t i = 0; i < m; ++i) gx[i] += xv[i] > T(0) ? g[i] : T(0);
            break;
          case UnaryKind::kSquare:
            for (std::size_t i = 0; i < m; ++i) gx[i] += T(2) * xv[i] * g[i];
            break;
          case UnaryKind::kExp:
            for (std::size_t i = 0; i < m; ++i) gx[i] += g[i] * y[i];
            break;
          case UnaryKind::kLog:
            for (std::size_t i = 0; i < m; ++i) gx[i] += g[i] / xv[i];
            break;
          case UnaryKind::kReciprocal:
            for (std::size_t i = 0; i < m; ++i) gx[i] -= g[i] * y[i] * y[i];
            break;
        }
      },
      name);
}

template <typename T>
Var<T> elementwise(BinaryKind kind, Var<T> a, Var<T> b) {
  Tape<T>& tape = same_tape(a, b, "elementwise");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  const bool same = av.shape() == bv.shape();
  // Between two single-element operands the higher-rank shape wins.
  const bool a_scalar = !same && av.size() == 1 && (bv.size() != 1 || av.rank() < bv.rank());
  const bool b_scalar = !same && !a_scalar && bv.size() == 1;
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError("elementwise: incompatible shapes " + shape_str(av.shape()) + " and " +
                         shape_str(bv.shape()));
  }
  Tensor<T> out(a_scalar ? bv.shape() : av.shape());
  const std::size_t n = out.size();
  const char* name = "binary";
  if (same) {
    switch (kind) {
      case BinaryKind::kAdd:
        name = "add";
        simd::add(av.data(), bv.data(), out.data(), n);
        break;
      case BinaryKind::kSub:
        name = "sub";
        for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - bv[i];
        break;
      case BinaryKind::kMul:
        name = "mul";
        simd::mul(av.data(), bv.data(), out.data(), n);
        break;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const T x = a_scalar ? av[0] : av[i];
      const T y = b_scalar ? bv[0] : bv[i];
      switch (kind) {
        case BinaryKind::kAdd:
          out[i] = x + y;
          break;
        case BinaryKind::kSub:
          out[i] = x - y;
          break;
        case BinaryKind::kMul:
          out[i] = x * y;
          break;
      }
    }
  }
  const std::uint32_t ai = a.id;
  const std::uint32_t bi = b.id;
  return tape.record(
      std::move(out), tape.requires_grad(a) || tape.requires_grad(b),
      [kind, ai, bi, a_scalar, b_scalar](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        const std::size_t m = g.size();
        if (t.requires_grad(ai)) {
          Tensor<T>& ga = t.grad_mut(ai);
          const Tensor<T>& bv2 = t.value(bi);
          for (std::size_t i = 0; i < m; ++i) {
            T d = g[i];
            if (kind == BinaryKind::kMul) d *= b_scalar ? bv2[0] : bv2[i];
            ga[a_scalar ? 0 : i] += d;
          }
        }
        if (t.requires_grad(bi)) {
          Tensor<T>& gb = t.grad_mut(bi);
          const Tensor<T>& av2 = t.value(ai);
          for (std::size_t i = 0; i < m; ++i) {
            T d = g[i];
            if (kind == BinaryKind::kSub) d = -d;
            if (kind == BinaryKind::kMul) d *= a_scalar ? av2[0] : av2[i];
            gb[b_scalar ? 0 : i] += d;
          }
        }
      },
      name);
}

template <typename T>
Var<T> scale(Var<T> x, T c) {
  Tape<T>& tape = tape_of(x, "scale");
  Tensor<T> out = x.value();
  for (T& v : out.storage()) v *= c;
  const std::uint32_t xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [xi, c](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        simd::axpy(c, g.data(), t.grad_mut(xi).data(), g.size());
      },
      "scale");
}

template <typename T>
Var<T> add_scalar(Var<T> x, T c) {
  Tape<T>& tape = tape_of(x, "add_scalar");
  Tensor<T> out = x.value();
  for (T& v : out.storage()) v += c;
  const std::uint32_t xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [xi](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        simd::axpy(T(1), g.data(), t.grad_mut(xi).data(), g.size());
      },
      "add_scalar");
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tape = same_tape(a, b, "matmul");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(av.shape()) + " by " + shape_str(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor<T> out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      simd::axpy(av[i * k + p], bv.data() + p * n, out.data() + i * n, n);
    }
  }
  const std::uint32_t ai = a.id, bi = b.id;
  return tape.record(
      std::move(out), tape.requires_grad(a) || tape.requires_grad(b),
      [ai, bi, m, k, n](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        const Tensor<T>& av2 = t.value(ai);
        const Tensor<T>& bv2 = t.value(bi);
        if (t.requires_grad(ai)) {
          Tensor<T>& ga = t.grad_mut(ai);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              ga[i * k + p] += simd::dot(g.data() + i * n, bv2.data() + p * n, n);
            }
          }
        }
        if (t.requires_grad(bi)) {
          Tensor<T>& gb = t.grad_mut(bi);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              simd::axpy(av2[i * k + p], g.data() + i * n, gb.data() + p * n, n);
            }
          }
        }
      },
      "matmul");
}

template <typename T>
Var<T> matvec(Var<T> a, Var<T> x) {
  Tape<T>& tape = same_tape(a, x, "matvec");
  const Tensor<T>& av = a.value();
  const Tensor<T>& xv = x.value();
  if (av.rank() != 2 || xv.rank() != 1 || av.dim(1) != xv.dim(0)) {
    throw DimensionError("matvec: cannot multiply " + shape_str(av.shape()) + " by " + shape_str(xv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1);
  Tensor<T> out(Shape{m});
  for (std::size_t i = 0; i < m; ++i) out[i] = simd::dot(av.data() + i * k, xv.data(), k);
  const std::uint32_t ai = a.id, xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(a) || tape.requires_grad(x),
      [ai, xi, m, k](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        if (t.requires_grad(ai)) {
          const Tensor<T>& xv2 = t.value(xi);
          Tensor<T>& ga = t.grad_mut(ai);
          for (std::size_t i = 0; i < m; ++i) {
            if (g[i] != T(0)) simd::axpy(g[i], xv2.data(), ga.data() + i * k, k);
          }
        }
        if (t.requires_grad(xi)) {
          const Tensor<T>& av2 = t.value(ai);
          Tensor<T>& gx = t.grad_mut(xi);
          for (std::size_t i = 0; i < m; ++i) {
            if (g[i] != T(0)) simd::axpy(g[i], av2.data() + i * k, gx.data(), k);
          }
        }
      },
      "matvec");
}

template <typename T>
Var<T> matvec_t(Var<T> a, Var<T> x) {
  Tape<T>& tape = same_tape(a, x, "matvec_t");
  const Tensor<T>& av = a.value();
  const Tensor<T>& xv = x.value();
  if (av.rank() != 2 || xv.rank() != 1 || av.dim(0) != xv.dim(0)) {
    throw DimensionError("matvec_t: cannot multiply transpose of " + shape_str(av.shape()) + " by " +
                         shape_str(xv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1);
  Tensor<T> out(Shape{k});
  for (std::size_t i = 0; i < m; ++i) simd::axpy(xv[i], av.data() + i * k, out.data(), k);
  const std::uint32_t ai = a.id, xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(a) || tape.requires_grad(x),
      [ai, xi, m, k](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        if (t.requires_grad(ai)) {
          const Tensor<T>& xv2 = t.value(xi);
          Tensor<T>& ga = t.grad_mut(ai);
          for (std::size_t i = 0; i < m; ++i) simd::axpy(xv2[i], g.data(), ga.data() + i * k, k);
        }
        if (t.requires_grad(xi)) {
          const Tensor<T>& av2 = t.value(ai);
          Tensor<T>& gx = t.grad_mut(xi);
          for (std::size_t i = 0; i < m; ++i) gx[i] += simd::dot(av2.data() + i * k, g.data(), k);
        }
      },
      "matvec_t");
}

template <typename T>
Var<T> add_row_bias(Var<T> m, Var<T> b) {
  Tape<T>& tape = same_tape(m, b, "add_row_bias");
  const Tensor<T>& mv = m.value();
  const Tensor<T>& bv = b.value();
  if (mv.rank() != 2 || bv.rank() != 1 || mv.dim(1) != bv.dim(0)) {
    throw DimensionError("add_row_bias: " + shape_str(mv.shape()) + " with bias " + shape_str(bv.shape()));
  }
  const std::size_t rows = mv.dim(0), cols = mv.dim(1);
  Tensor<T> out(mv.shape());
  for (std::size_t r = 0; r < rows; ++r) simd::add(mv.data() + r * cols, bv.data(), out.data() + r * cols, cols);
  const std::uint32_t mi = m.id, bi = b.id;
  return tape.record(
      std::move(out), tape.requires_grad(m) || tape.requires_grad(b),
      [mi, bi, rows, cols](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        if (t.requires_grad(mi)) simd::axpy(T(1), g.data(), t.grad_mut(mi).data(), g.size());
        if (t.requires_grad(bi)) {
          Tensor<T>& gb = t.grad_mut(bi);
          for (std::size_t r = 0; r < rows; ++r) simd::axpy(T(1), g.data() + r * cols, gb.data(), cols);
        }
      },
      "add_row_bias");
}

template <typename T>
Var<T> sum(Var<T> x) {
  Tape<T>& tape = tape_of(x, "sum");
  const Tensor<T>& xv = x.value();
  Tensor<T> out = Tensor<T>::scalar(simd::sum(xv.data(), xv.size()));
  const std::uint32_t xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [xi](Tape<T>& t, std::uint32_t self) {
        const T g = t.grad_mut(self)[0];
        Tensor<T>& gx = t.grad_mut(xi);
        for (T& v : gx.storage()) v += g;
      },
      "sum");
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t n = x.size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(n));
}

template <typename T>
Var<T> dot(Var<T> a, Var<T> b) {
  Tape<T>& tape = same_tape(a, b, "dot");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("dot: sizes differ, " + shape_str(av.shape()) + " and " + shape_str(bv.shape()));
  }
  Tensor<T> out = Tensor<T>::scalar(simd::dot(av.data(), bv.data(), av.size()));
  const std::uint32_t ai = a.id, bi = b.id;
  return tape.record(
      std::move(out), tape.requires_grad(a) || tape.requires_grad(b),
      [ai, bi](Tape<T>& t, std::uint32_t self) {
        const T g = t.grad_mut(self)[0];
        if (t.requires_grad(ai)) {
          const Tensor<T>& bv2 = t.value(bi);
          simd::axpy(g, bv2.data(), t.grad_mut(ai).data(), bv2.size());
        }
        if (t.requires_grad(bi)) {
          const Tensor<T>& av2 = t.value(ai);
          simd::axpy(g, av2.data(), t.grad_mut(bi).data(), av2.size());
        }
      },
      "dot");
}

template <typename T>
Var<T> sq_distance(Var<T> a, Var<T> b) {
  Tape<T>& tape = same_tape(a, b, "sq_distance");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  if (av.shape() != bv.shape()) {
    throw DimensionError("sq_distance: shapes differ, " + shape_str(av.shape()) + " and " + shape_str(bv.shape()));
  }
  Tensor<T> out = Tensor<T>::scalar(simd::sq_dist(av.data(), bv.data(), av.size()));
  const std::uint32_t ai = a.id, bi = b.id;
  return tape.record(
      std::move(out), tape.requires_grad(a) || tape.requires_grad(b),
      [ai, bi](Tape<T>& t, std::uint32_t self) {
        const T g = t.grad_mut(self)[0];
        const Tensor<T>& av2 = t.value(ai);
        const Tensor<T>& bv2 = t.value(bi);
        const std::size_t n = av2.size();
        if (t.requires_grad(ai)) {
          Tensor<T>& ga = t.grad_mut(ai);
          for (std::size_t i = 0; i < n; ++i) ga[i] += T(2) * g * (av2[i] - bv2[i]);
        }
        if (t.requires_grad(bi)) {
          Tensor<T>& gb = t.grad_mut(bi);
          for (std::size_t i = 0; i < n; ++i) gb[i] -= T(2) * g * (av2[i] - bv2[i]);
        }
      },
      "sq_distance");
}

template <typename T>
Var<T> concat(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  Tape<T>& tape = tape_of(parts[0], "concat");
  std::size_t total = 0;
  bool needs = false;
  for (const Var<T>& p : parts) {
    if (p.tape != &tape) throw ContractError("concat: operands live on different tapes");
    total += p.size();
    needs = needs || tape.requires_grad(p);
  }
  Tensor<T> out(Shape{total});
  std::vector<std::uint32_t> ids;
  ids.reserve(parts.size());
  std::size_t offset = 0;
  for (const Var<T>& p : parts) {
    const Tensor<T>& v = p.value();
    std::copy(v.data(), v.data() + v.size(), out.data() + offset);
    offset += v.size();
    ids.push_back(p.id);
  }
  return tape.record(
      std::move(out), needs,
      [ids = std::move(ids)](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        std::size_t off = 0;
        for (std::uint32_t id : ids) {
          const std::size_t n = t.value(id).size();
          if (t.requires_grad(id)) simd::axpy(T(1), g.data() + off, t.grad_mut(id).data(), n);
          off += n;
        }
      },
      "concat");
}

template <typename T>
Var<T> slice(Var<T> x, std::size_t offset, std::size_t length) {
  Tape<T>& tape = tape_of(x, "slice");
  const Tensor<T>& xv = x.value();
  if (offset + length > xv.size()) {
    throw DimensionError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                         ") exceeds " + shape_str(xv.shape()));
  }
  Tensor<T> out(Shape{length});
  std::copy(xv.data() + offset, xv.data() + offset + length, out.data());
  const std::uint32_t xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [xi, offset, length](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        simd::axpy(T(1), g.data(), t.grad_mut(xi).data() + offset, length);
      },
      "slice");
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tape<T>& tape = tape_of(x, "reshape");
  Tensor<T> out = x.value().reshaped(std::move(shape));
  const std::uint32_t xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [xi](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        simd::axpy(T(1), g.data(), t.grad_mut(xi).data(), g.size());
      },
      "reshape");
}

template <typename T>
Var<T> transpose(Var<T> m) {
  Tape<T>& tape = tape_of(m, "transpose");
  const Tensor<T>& mv = m.value();
  require_rank(mv.shape(), 2, "transpose");
  const std::size_t r = mv.dim(0), c = mv.dim(1);
  Tensor<T> out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = mv[i * c + j];
  const std::uint32_t mi = m.id;
  return tape.record(
      std::move(out), tape.requires_grad(m),
      [mi, r, c](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        Tensor<T>& gm = t.grad_mut(mi);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += g[j * r + i];
      },
      "transpose");
}

template <typename T>
Var<T> pick(Var<T> x, std::size_t index) {
  Tape<T>& tape = tape_of(x, "pick");
  const Tensor<T>& xv = x.value();
  if (index >= xv.size()) {
    throw ContractError("pick: index " + std::to_string(index) + " out of range for " + shape_str(xv.shape()));
  }
  const std::uint32_t xi = x.id;
  return tape.record(
      Tensor<T>::scalar(xv[index]), tape.requires_grad(x),
      [xi, index](Tape<T>& t, std::uint32_t self) { t.grad_mut(xi)[index] += t.grad_mut(self)[0]; }, "pick");
}

template <typename T>
Var<T> gather(Var<T> x, std::shared_ptr<const std::vector<std::int64_t>> index, Shape out_shape) {
  Tape<T>& tape = tape_of(x, "gather");
  const Tensor<T>& xv = x.value();
  if (shape_size(out_shape) != index->size()) {
    throw DimensionError("gather: index length does not match output shape " + shape_str(out_shape));
  }
  Tensor<T> out(std::move(out_shape));
  const auto& idx = *index;
  const auto limit = static_cast<std::int64_t>(xv.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= limit) throw DimensionError("gather: index out of range");
    out[i] = idx[i] < 0 ? T(0) : xv[static_cast<std::size_t>(idx[i])];
  }
  const std::uint32_t xi = x.id;
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [xi, index](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        Tensor<T>& gx = t.grad_mut(xi);
        const auto& ix = *index;
        for (std::size_t i = 0; i < ix.size(); ++i) {
          if (ix[i] >= 0) gx[static_cast<std::size_t>(ix[i])] += g[i];
        }
      },
      "gather");
}

template <typename T>
Var<T> stop_gradient(Var<T> x) {
  Tape<T>& tape = tape_of(x, "stop_gradient");
  tape.note_stop_gradient();
  FreezeLog<T>* log = tape.freeze_log();
  if (log != nullptr) {
    if (log->mode == FreezeLog<T>::Mode::kRecord) {
      log->values.push_back(x.value());
    } else {
      if (log->cursor >= log->values.size() || log->values[log->cursor].shape() != x.shape()) {
        throw ContractError("stop_gradient replay: graph structure changed between passes");
      }
      return tape.record(log->values[log->cursor++], false, nullptr, "stop_gradient");
    }
  }
  return tape.record(x.value(), false, nullptr, "stop_gradient");
}

template <typename T>
std::vector<T> log_softmax_values(std::span<const T> logits) {
  T mx = -std::numeric_limits<T>::infinity();
  for (T v : logits) mx = std::max(mx, v);
  T acc = 0;
  for (T v : logits) acc += std::exp(v - mx);
  const T lse = mx + std::log(acc);
  std::vector<T> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

template <typename T>
std::vector<T> softmax_values(std::span<const T> logits) {
  std::vector<T> out = log_softmax_values(logits);
  for (T& v : out) v = std::exp(v);
  return out;
}

template <typename T>
Var<T> softmax_xent(Var<T> logits, std::size_t target) {
  Tape<T>& tape = tape_of(logits, "softmax_xent");
  const Tensor<T>& lv = logits.value();
  if (lv.size() == 0) throw ContractError("softmax_xent: empty logits");
  if (target >= lv.size()) {
    throw ContractError("softmax_xent: target " + std::to_string(target) + " out of range for " +
                        std::to_string(lv.size()) + " classes");
  }
  const std::vector<T> lp = log_softmax_values<T>(lv.values());
  const std::uint32_t li = logits.id;
  return tape.record(
      Tensor<T>::scalar(-lp[target]), tape.requires_grad(logits),
      [li, target](Tape<T>& t, std::uint32_t self) {
        const T g = t.grad_mut(self)[0];
        const std::vector<T> p = softmax_values<T>(t.value(li).values());
        Tensor<T>& gl = t.grad_mut(li);
        for (std::size_t i = 0; i < p.size(); ++i) gl[i] += g * (p[i] - (i == target ? T(1) : T(0)));
      },
      "softmax_xent");
}

template <typename T>
Var<T> log_softmax(Var<T> logits) {
  Tape<T>& tape = tape_of(logits, "log_softmax");
  const Tensor<T>& lv = logits.value();
  Tensor<T> out(lv.shape(), log_softmax_values<T>(lv.values()));
  const std::uint32_t li = logits.id;
  return tape.record(
      std::move(out), tape.requires_grad(logits),
      [li](Tape<T>& t, std::uint32_t self) {
        const Tensor<T>& g = t.grad_mut(self);
        const Tensor<T>& y = t.value(self);
        const T gs = simd::sum(g.data(), g.size());
        Tensor<T>& gl = t.grad_mut(li);
        for (std::size_t i = 0; i < g.size(); ++i) gl[i] += g[i] - std::exp(y[i]) * gs;
      },
      "log_softmax");
}

template <typename T>
Var<T> softmax_entropy(Var<T> logits) {
  Tape<T>& tape = tape_of(logits, "softmax_entropy");
  const std::vector<T> lp = log_softmax_values<T>(logits.value().values());
  T h = 0;
  for (T v : lp) h -= std::exp(v) * v;
  const std::uint32_t li = logits.id;
  return tape.record(
      Tensor<T>::scalar(h), tape.requires_grad(logits),
      [li](Tape<T>& t, std::uint32_t self) {
        const T g = t.grad_mut(self)[0];
        const T hv = t.value(self)[0];
        const std::vector<T> lp2 = log_softmax_values<T>(t.value(li).values());
        Tensor<T>& gl = t.grad_mut(li);
        for (std::size_t i = 0; i < lp2.size(); ++i) gl[i] -= g * std::exp(lp2[i]) * (lp2[i] + hv);
      },
      "softmax_entropy");
}

template <typename T>
Var<T> sigmoid_xent(Var<T> logits, const Tensor<T>& targets) {
  Tape<T>& tape = tape_of(logits, "sigmoid_xent");
  const Tensor<T>& zv = logits.value();
  if (zv.size() != targets.size()) {
    throw DimensionError("sigmoid_xent: logits " + shape_str(zv.shape()) + " vs targets " +
                         shape_str(targets.shape()));
  }
  T loss = 0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    const T y = targets[i];
    if (!(y >= T(0) && y <= T(1))) {
      throw ContractError("sigmoid_xent: target " + std::to_string(static_cast<double>(y)) + " outside [0, 1]");
    }
    const T z = zv[i];
    loss += std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  const std::uint32_t li = logits.id;
  return tape.record(
      Tensor<T>::scalar(loss), tape.requires_grad(logits),
      [li, targets](Tape<T>& t, std::uint32_t self) {
        const T g = t.grad_mut(self)[0];
        const Tensor<T>& z = t.value(li);
        Tensor<T>& gz = t.grad_mut(li);
        for (std::size_t i = 0; i < z.size(); ++i) gz[i] += g * (stable_sigmoid(z[i]) - targets[i]);
      },
      "sigmoid_xent");
}

#define MRA_INSTANTIATE_OPS(T)                                                                     \
  template Var<T> elementwise<T>(UnaryKind, Var<T>);                                               \
  template Var<T> elementwise<T>(BinaryKind, Var<T>, Var<T>);                                      \
  template Var<T> scale<T>(Var<T>, T);                                                             \
  template Var<T> add_scalar<T>(Var<T>, T);                                                        \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                       \
  template Var<T> matvec<T>(Var<T>, Var<T>);                                                       \
  template Var<T> matvec_t<T>(Var<T>, Var<T>);                                                     \
  template Var<T> add_row_bias<T>(Var<T>, Var<T>);                                                 \
  template Var<T> sum<T>(Var<T>);                                                                  \
  template Var<T> mean<T>(Var<T>);                                                                 \
  template Var<T> dot<T>(Var<T>, Var<T>);                                                          \
  template Var<T> sq_distance<T>(Var<T>, Var<T>);                                                  \
  template Var<T> concat<T>(std::span<const Var<T>>);                                              \
  template Var<T> slice<T>(Var<T>, std::size_t, std::size_t);                                      \
  template Var<T> reshape<T>(Var<T>, Shape);                                                       \
  template Var<T> transpose<T>(Var<T>);                                                            \
  template Var<T> pick<T>(Var<T>, std::size_t);                                                    \
  template Var<T> gather<T>(Var<T>, std::shared_ptr<const std::vector<std::int64_t>>, Shape);      \
  template Var<T> stop_gradient<T>(Var<T>);                                                        \
  template Var<T> softmax_xent<T>(Var<T>, std::size_t);                                            \
  template Var<T> log_softmax<T>(Var<T>);                                                          \
  template Var<T> softmax_entropy<T>(Var<T>);                                                      \
  template Var<T> sigmoid_xent<T>(Var<T>, const Tensor<T>&);                                       \
  template std::vector<T> softmax_values<T>(std::span<const T>);                                   \
  template std::vector<T> log_softmax_values<T>(std::span<const T>);

MRA_INSTANTIATE_OPS(float)
MRA_INSTANTIATE_OPS(double)

#undef MRA_INSTANTIATE_OPS

}  // namespace mra::diffcore
