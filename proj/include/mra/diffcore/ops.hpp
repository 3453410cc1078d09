// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Binary elementwise ops accept equal shapes or a
// single-element operand broadcast against the other; anything else is a
// DimensionError. Vectors are rank-1, matrices rank-2 row-major.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mra/diffcore/tape.hpp"

namespace mra::diffcore {

enum class UnaryKind { kSigmoid, kTanh, kRelu, kSquare, kExp, kLog, kReciprocal };
enum class BinaryKind { kAdd, kSub, kMul };

template <typename T>
Var<T> elementwise(UnaryKind kind, Var<T> x);
template <typename T>
Var<T> elementwise(BinaryKind kind, Var<T> a, Var<T> b);

template <typename T>
Var<T> sigmoid(Var<T> x) {
  return elementwise(UnaryKind::kSigmoid, x);
}
template <typename T>
Var<T> tanh(Var<T> x) {
  return elementwise(UnaryKind::kTanh, x);
}
template <typename T>
Var<T> relu(Var<T> x) {
  return elementwise(UnaryKind::kRelu, x);
}
template <typename T>
Var<T> square(Var<T> x) {
  return elementwise(UnaryKind::kSquare, x);
}
template <typename T>
Var<T> exp(Var<T> x) {
  return elementwise(UnaryKind::kExp, x);
}
template <typename T>
Var<T> log(Var<T> x) {
  return elementwise(UnaryKind::kLog, x);
}
template <typename T>
Var<T> reciprocal(Var<T> x) {
  return elementwise(UnaryKind::kReciprocal, x);
}
template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return elementwise(BinaryKind::kAdd, a, b);
}
template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return elementwise(BinaryKind::kSub, a, b);
}
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return elementwise(BinaryKind::kMul, a, b);
}

// x * c and x + c for a constant c.
template <typename T>
Var<T> scale(Var<T> x, T c);
template <typename T>
Var<T> add_scalar(Var<T> x, T c);

// [m x k] * [k x n] -> [m x n]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
// [m x k] * [k] -> [m]
template <typename T>
Var<T> matvec(Var<T> a, Var<T> x);
// [m x k]^T * [m] -> [k]
template <typename T>
Var<T> matvec_t(Var<T> a, Var<T> x);
// w * x + b
template <typename T>
Var<T> affine(Var<T> w, Var<T> x, Var<T> b) {
  return add(matvec(w, x), b);
}
// [r x c] + b[c] broadcast over rows.
template <typename T>
Var<T> add_row_bias(Var<T> m, Var<T> b);

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);
template <typename T>
Var<T> dot(Var<T> a, Var<T> b);
// ||a - b||^2 as a scalar.
template <typename T>
Var<T> sq_distance(Var<T> a, Var<T> b);

// Flattened concatenation into a vector.
template <typename T>
Var<T> concat(std::span<const Var<T>> parts);
template <typename T>
Var<T> concat(std::initializer_list<Var<T>> parts) {
  return concat(std::span<const Var<T>>(parts.begin(), parts.size()));
}
// Contiguous range of the flattened input.
template <typename T>
Var<T> slice(Var<T> x, std::size_t offset, std::size_t length);
template <typename T>
Var<T> reshape(Var<T> x, Shape shape);
template <typename T>
Var<T> transpose(Var<T> m);
// Element i of the flattened input as a scalar.
template <typename T>
Var<T> pick(Var<T> x, std::size_t index);
// out[i] = x[index[i]], or 0 where index[i] < 0.
template <typename T>
Var<T> gather(Var<T> x, std::shared_ptr<const std::vector<std::int64_t>> index, Shape out_shape);

// Forward identity; contributes no gradient to x.
template <typename T>
Var<T> stop_gradient(Var<T> x);

// -log softmax(logits)[target]
template <typename T>
Var<T> softmax_xent(Var<T> logits, std::size_t target);
template <typename T>
Var<T> log_softmax(Var<T> logits);
// Entropy of softmax(logits) as a scalar.
template <typename T>
Var<T> softmax_entropy(Var<T> logits);
// sum_i -y_i log sigma(z_i) - (1 - y_i) log(1 - sigma(z_i)), targets constant in [0, 1].
template <typename T>
Var<T> sigmoid_xent(Var<T> logits, const Tensor<T>& targets);

// Plain-value helpers used outside the tape.
template <typename T>
std::vector<T> softmax_values(std::span<const T> logits);
template <typename T>
std::vector<T> log_softmax_values(std::span<const T> logits);

}  // namespace mra::diffcore
