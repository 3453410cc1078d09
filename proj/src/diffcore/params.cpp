// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/diffcore/params.hpp"

#include <cmath>

#include "mra/common/errors.hpp"

namespace mra::diffcore {

template <typename T>
Tensor<T>& ParameterSet<T>::add(const std::string& id, Tensor<T> value) {
  auto [it, inserted] = tensors_.emplace(id, std::move(value));
  if (!inserted) throw ContractError("ParameterSet: duplicate parameter id '" + id + "'");
  return it->second;
}

template <typename T>
Tensor<T>& ParameterSet<T>::at(const std::string& id) {
  auto it = tensors_.find(id);
  if (it == tensors_.end()) throw ContractError("ParameterSet: unknown parameter id '" + id + "'");
  return it->second;
}

template <typename T>
const Tensor<T>& ParameterSet<T>::at(const std::string& id) const {
  auto it = tensors_.find(id);
  if (it == tensors_.end()) throw ContractError("ParameterSet: unknown parameter id '" + id + "'");
  return it->second;
}

template <typename T>
std::vector<std::string> ParameterSet<T>::ids() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [id, _] : tensors_) out.push_back(id);
  return out;
}

template <typename T>
std::size_t ParameterSet<T>::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

template <typename T>
Var<T> ParamBinding<T>::operator()(const std::string& id) {
  auto it = bound_.find(id);
  if (it != bound_.end()) return it->second;
  Var<T> v = tape_->bind(params_->at(id), requires_grad_);
  bound_.emplace(id, v);
  return v;
}

template <typename T>
GradientMap<T> ParamBinding<T>::gradients() const {
  GradientMap<T> out;
  for (const auto& [id, tensor] : *params_) {
    auto it = bound_.find(id);
    out.emplace(id, it == bound_.end() ? Tensor<T>(tensor.shape()) : tape_->grad(it->second));
  }
  return out;
}

template <typename T>
T global_norm(const GradientMap<T>& grads) {
  double acc = 0.0;
  for (const auto& [_, g] : grads) {
    for (T v : g.values()) acc += static_cast<double>(v) * static_cast<double>(v);
  }
  return static_cast<T>(std::sqrt(acc));
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class ParamBinding<float>;
template class ParamBinding<double>;
template float global_norm<float>(const GradientMap<float>&);
template double global_norm<double>(const GradientMap<double>&);

}  // namespace mra::diffcore
