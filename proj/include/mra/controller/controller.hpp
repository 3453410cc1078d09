// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Encoder, working-memory core and policy/value heads.
//
// Parameter ids:
//   encoder/w1 encoder/b1 encoder/w2 encoder/b2             perceptron encoder
//   encoder/conv1_w encoder/conv1_b encoder/conv2_w
//   encoder/conv2_b encoder/fc_w encoder/fc_b               grid encoder
//   core/w core/b                                           LSTM, gates i f g o
//   core/w1 core/b1 core/w2 core/b2                         feedforward core
//   heads/policy_w heads/policy_b heads/value_w heads/value_b

#pragma once

#include <optional>

#include "mra/common/observation.hpp"
#include "mra/diffcore/init.hpp"
#include "mra/diffcore/ops.hpp"
#include "mra/diffcore/params.hpp"

namespace mra::controller {

using diffcore::ParamBinding;
using diffcore::ParameterSet;
using diffcore::Tensor;
using diffcore::Var;

enum class CoreKind { kFeedForward, kLstm };

struct ControllerConfig {
  CoreKind core = CoreKind::kLstm;
  bool mem = true;
  ObservationSpec obs;
  std::size_t num_actions = 5;
  std::size_t embed = 64;
  std::size_t hidden = 128;
  std::size_t encoder_hidden = 128;
  std::size_t conv_channels = 8;
  float forget_bias = 1.0f;
};

// Width of the core input: embed, plus hidden when memory is read.
std::size_t core_input_width(const ControllerConfig& cfg);

template <typename T>
void init_controller_params(ParameterSet<T>& params, const ControllerConfig& cfg, diffcore::Rng& rng);

// obs is a flat [flat_size] vector; grid observations are channel-last.
template <typename T>
Var<T> encode(ParamBinding<T>& pb, const ControllerConfig& cfg, Var<T> obs);

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

template <typename T>
LstmState<T> lstm_step(ParamBinding<T>& pb, Var<T> x, std::optional<Var<T>> m, LstmState<T> prev);

template <typename T>
Var<T> ff_step(ParamBinding<T>& pb, Var<T> x, std::optional<Var<T>> m);

template <typename T>
struct HeadsOutput {
  Var<T> logits;
  Var<T> value;  // scalar
};

template <typename T>
HeadsOutput<T> heads(ParamBinding<T>& pb, Var<T> h);

}  // namespace mra::controller
