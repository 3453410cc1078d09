// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mra/diffcore/tape.hpp"

namespace mra::diffcore {

template <typename T>
using GradientMap = std::map<std::string, Tensor<T>>;

// Named parameter tensors plus a version counter bumped once per optimizer
// step. Copies are independent value snapshots.
template <typename T>
class ParameterSet {
 public:
  Tensor<T>& add(const std::string& id, Tensor<T> value);
  bool contains(const std::string& id) const { return tensors_.count(id) != 0; }
  Tensor<T>& at(const std::string& id);
  const Tensor<T>& at(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t num_scalars() const;

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }
  void set_version(std::uint64_t v) { version_ = v; }

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.version_ == b.version_ && a.tensors_ == b.tensors_;
  }

 private:
  std::map<std::string, Tensor<T>> tensors_;
  std::uint64_t version_ = 0;
};

// Binds parameters onto a tape on first use, without copying. With
// requires_grad off the parameters enter as constants (inference).
template <typename T>
class ParamBinding {
 public:
  ParamBinding(Tape<T>& tape, const ParameterSet<T>& params, bool requires_grad = true)
      : tape_(&tape), params_(&params), requires_grad_(requires_grad) {}

  Var<T> operator()(const std::string& id);
  bool contains(const std::string& id) const { return params_->contains(id); }
  Tape<T>& tape() const { return *tape_; }
  const ParameterSet<T>& params() const { return *params_; }

  // Gradient for every parameter in the set; zeros for unreached ones.
  GradientMap<T> gradients() const;

 private:
  Tape<T>* tape_;
  const ParameterSet<T>* params_;
  bool requires_grad_;
  std::map<std::string, Var<T>> bound_;
};

template <typename T>
T global_norm(const GradientMap<T>& grads);

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class ParamBinding<float>;
extern template class ParamBinding<double>;

}  // namespace mra::diffcore
