// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
// the append order is a topological order and backward() walks it in reverse.
// A tape is confined to one thread.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "mra/diffcore/tensor.hpp"

namespace mra::diffcore {

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape is alive
// and not cleared.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  bool valid() const { return tape != nullptr; }
  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
};

// Values observed at stop_gradient sites during a recording pass. Replaying
// them holds the frozen branches fixed while the live branches are perturbed,
// which is what a finite-difference oracle for a stop-gradient graph needs.
template <typename T>
struct FreezeLog {
  enum class Mode { kRecord, kReplay };
  Mode mode = Mode::kRecord;
  std::vector<Tensor<T>> values;
  std::size_t cursor = 0;
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Non-differentiable leaf owning its value.
  Var<T> constant(Tensor<T> value);
  // Differentiable leaf owning its value.
  Var<T> variable(Tensor<T> value);
  // Leaf referencing external storage, which must outlive the tape's use.
  Var<T> bind(const Tensor<T>& external, bool requires_grad = true);

  // Appends an op result. `backward` is dropped when no input needs a gradient.
  Var<T> record(Tensor<T> value, bool requires_grad, Backward backward, const char* op_name);

  const Tensor<T>& value(std::uint32_t id) const;
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var<T> v) const { return requires_grad(v.id); }

  // Gradient accumulator, allocated as zeros on first touch.
  Tensor<T>& grad_mut(std::uint32_t id);
  // Gradient after backward(); zeros when the node was not reached.
  Tensor<T> grad(Var<T> v) const;
  bool has_grad(Var<T> v) const { return nodes_[v.id].has_grad; }

  // Reverse sweep from a scalar loss. Throws ContractError for a non-scalar
  // loss or a loss recorded on another tape.
  void backward(Var<T> loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }
  // Default for tapes constructed afterwards.
  static void set_default_check_finite(bool on);

  void set_freeze_log(FreezeLog<T>* log) { freeze_ = log; }
  FreezeLog<T>* freeze_log() const { return freeze_; }
  std::size_t stop_gradient_count() const { return stop_gradient_count_; }
  void note_stop_gradient() { ++stop_gradient_count_; }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };

  // deque keeps references to earlier nodes stable while appending.
  std::deque<Node> nodes_;
  bool check_finite_;
  FreezeLog<T>* freeze_ = nullptr;
  std::size_t stop_gradient_count_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace mra::diffcore
