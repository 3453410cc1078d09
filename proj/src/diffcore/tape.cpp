// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/diffcore/tape.hpp"

#include <atomic>
#include <string>

#include "mra/common/errors.hpp"

namespace mra::diffcore {
namespace {
std::atomic<bool> g_default_check_finite{false};
}

template <typename T>
Tape<T>::Tape() : check_finite_(g_default_check_finite.load()) {}

template <typename T>
void Tape<T>::set_default_check_finite(bool on) {
  g_default_check_finite.store(on);
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  return record(std::move(value), false, nullptr, "constant");
}

template <typename T>
Var<T> Tape<T>::variable(Tensor<T> value) {
  return record(std::move(value), true, nullptr, "variable");
}

template <typename T>
Var<T> Tape<T>::bind(const Tensor<T>& external, bool requires_grad) {
  if (check_finite_ && !external.all_finite()) {
    throw NumericError("bind: non-finite parameter values");
  }
  Node& node = nodes_.emplace_back();
  node.external = &external;
  node.requires_grad = requires_grad;
  return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, bool requires_grad, Backward backward, const char* op_name) {
  if (check_finite_ && !value.all_finite()) {
    throw NumericError(std::string("non-finite output from op '") + op_name + "' with shape " +
                       shape_str(value.shape()));
  }
  Node& node = nodes_.emplace_back();
  node.owned = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Tape<T>::value(std::uint32_t id) const {
  const Node& node = nodes_[id];
  return node.external != nullptr ? *node.external : node.owned;
}

template <typename T>
Tensor<T>& Tape<T>::grad_mut(std::uint32_t id) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    node.grad = Tensor<T>(value(id).shape());
    node.has_grad = true;
  }
  return node.grad;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> v) const {
  const Node& node = nodes_[v.id];
  if (node.has_grad) return node.grad;
  return Tensor<T>(value(v.id).shape());
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw ContractError("backward: loss was recorded on a different tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_str(value(loss.id).shape()));
  }
  for (Node& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor<T>();
  }
  if (!nodes_[loss.id].requires_grad) return;
  grad_mut(loss.id)[0] = T(1);
  for (std::int64_t i = loss.id; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.requires_grad || !node.has_grad || !node.backward) continue;
    node.backward(*this, static_cast<std::uint32_t>(i));
  }
}

template <typename T>
void Tape<T>::clear() {
  nodes_.clear();
  stop_gradient_count_ = 0;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace mra::diffcore
