// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/controller/controller.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "mra/common/errors.hpp"

namespace mra::controller {

using diffcore::Shape;
using diffcore::shape_str;

namespace {

struct ConvGeom {
  std::size_t h, w, c, stride;
  std::size_t out_h() const { return (h - 1) / stride + 1; }
  std::size_t out_w() const { return (w - 1) / stride + 1; }
};

// 3x3 patches with zero padding 1, channel-last.
std::shared_ptr<const std::vector<std::int64_t>> im2col_index(const ConvGeom& g) {
  static std::mutex mu;
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>,
                  std::shared_ptr<const std::vector<std::int64_t>>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(g.h, g.w, g.c, g.stride);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(g.out_h() * g.out_w() * 9 * g.c);
  for (std::size_t oy = 0; oy < g.out_h(); ++oy) {
    for (std::size_t ox = 0; ox < g.out_w(); ++ox) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const auto iy = static_cast<std::int64_t>(oy * g.stride) + ky - 1;
          const auto ix = static_cast<std::int64_t>(ox * g.stride) + kx - 1;
          const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::int64_t>(g.h) &&
                              ix < static_cast<std::int64_t>(g.w);
          for (std::size_t c = 0; c < g.c; ++c) {
            idx->push_back(inside ? (iy * static_cast<std::int64_t>(g.w) + ix) * static_cast<std::int64_t>(g.c) +
                                        static_cast<std::int64_t>(c)
                                  : -1);
          }
        }
      }
    }
  }
  cache.emplace(key, idx);
  return idx;
}

template <typename T>
Var<T> conv3x3(ParamBinding<T>& pb, Var<T> in, const ConvGeom& g, const std::string& w_id, const std::string& b_id) {
  const std::size_t rows = g.out_h() * g.out_w();
  Var<T> cols = diffcore::gather(in, im2col_index(g), Shape{rows, 9 * g.c});
  Var<T> out = diffcore::matmul(cols, diffcore::transpose(pb(w_id)));
  return diffcore::relu(diffcore::add_row_bias(out, pb(b_id)));
}

ConvGeom second_layer(const ObservationSpec& s, std::size_t channels) {
  return {s.height, s.width, channels, 2};
}

void require_width(const char* op, const char* what, std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionError(std::string(op) + ": " + what + " width " + std::to_string(got) + ", expected " +
                         std::to_string(want));
  }
}

}  // namespace

std::size_t core_input_width(const ControllerConfig& cfg) {
  return cfg.embed + (cfg.mem ? cfg.hidden : 0);
}

template <typename T>
void init_controller_params(ParameterSet<T>& params, const ControllerConfig& cfg, diffcore::Rng& rng) {
  using diffcore::uniform_fan_in;
  const std::size_t obs_n = cfg.obs.flat_size();
  if (obs_n == 0) throw ContractError("init_controller_params: empty observation spec");
  if (cfg.obs.is_grid()) {
    const std::size_t k1 = 9 * cfg.obs.channels;
    const std::size_t k2 = 9 * cfg.conv_channels;
    const ConvGeom g2 = second_layer(cfg.obs, cfg.conv_channels);
    const std::size_t flat = g2.out_h() * g2.out_w() * cfg.conv_channels;
    params.add("encoder/conv1_w", uniform_fan_in<T>(Shape{cfg.conv_channels, k1}, k1, rng));
    params.add("encoder/conv1_b", Tensor<T>(Shape{cfg.conv_channels}));
    params.add("encoder/conv2_w", uniform_fan_in<T>(Shape{cfg.conv_channels, k2}, k2, rng));
    params.add("encoder/conv2_b", Tensor<T>(Shape{cfg.conv_channels}));
    params.add("encoder/fc_w", uniform_fan_in<T>(Shape{cfg.embed, flat}, flat, rng));
    params.add("encoder/fc_b", Tensor<T>(Shape{cfg.embed}));
  } else {
    params.add("encoder/w1", uniform_fan_in<T>(Shape{cfg.encoder_hidden, obs_n}, obs_n, rng));
    params.add("encoder/b1", Tensor<T>(Shape{cfg.encoder_hidden}));
    params.add("encoder/w2", uniform_fan_in<T>(Shape{cfg.embed, cfg.encoder_hidden}, cfg.encoder_hidden, rng));
    params.add("encoder/b2", Tensor<T>(Shape{cfg.embed}));
  }
  const std::size_t in = core_input_width(cfg);
  const std::size_t H = cfg.hidden;
  if (cfg.core == CoreKind::kLstm) {
    params.add("core/w", uniform_fan_in<T>(Shape{4 * H, in + H}, in + H, rng));
    Tensor<T> b(Shape{4 * H});
    for (std::size_t i = H; i < 2 * H; ++i) b[i] = static_cast<T>(cfg.forget_bias);
    params.add("core/b", std::move(b));
  } else {
    params.add("core/w1", uniform_fan_in<T>(Shape{H, in}, in, rng));
    params.add("core/b1", Tensor<T>(Shape{H}));
    params.add("core/w2", uniform_fan_in<T>(Shape{H, H}, H, rng));
    params.add("core/b2", Tensor<T>(Shape{H}));
  }
  params.add("heads/policy_w", uniform_fan_in<T>(Shape{cfg.num_actions, H}, H, rng));
  params.add("heads/policy_b", Tensor<T>(Shape{cfg.num_actions}));
  params.add("heads/value_w", uniform_fan_in<T>(Shape{1, H}, H, rng));
  params.add("heads/value_b", Tensor<T>(Shape{1}));
}

template <typename T>
Var<T> encode(ParamBinding<T>& pb, const ControllerConfig& cfg, Var<T> obs) {
  require_width("encode", "observation", obs.size(), cfg.obs.flat_size());
  using namespace diffcore;
  if (!cfg.obs.is_grid()) {
    Var<T> z = relu(affine(pb("encoder/w1"), obs, pb("encoder/b1")));
    return tanh(affine(pb("encoder/w2"), z, pb("encoder/b2")));
  }
  const ConvGeom g1{cfg.obs.height, cfg.obs.width, cfg.obs.channels, 1};
  Var<T> a1 = conv3x3(pb, obs, g1, "encoder/conv1_w", "encoder/conv1_b");
  Var<T> a2 = conv3x3(pb, a1, second_layer(cfg.obs, cfg.conv_channels), "encoder/conv2_w", "encoder/conv2_b");
  Var<T> flat = reshape(a2, Shape{a2.size()});
  return tanh(affine(pb("encoder/fc_w"), flat, pb("encoder/fc_b")));
}

template <typename T>
LstmState<T> lstm_step(ParamBinding<T>& pb, Var<T> x, std::optional<Var<T>> m, LstmState<T> prev) {
  using namespace diffcore;
  const std::size_t H = prev.h.size();
  if (prev.c.size() != H) throw DimensionError("lstm_step: h and c widths differ");
  Var<T> in = m ? concat({x, *m, prev.h}) : concat({x, prev.h});
  const Tensor<T>& w = pb.params().at("core/w");
  if (w.rank() != 2 || w.dim(0) != 4 * H) {
    throw DimensionError("lstm_step: core/w " + shape_str(w.shape()) + " does not fit hidden width " +
                         std::to_string(H));
  }
  require_width("lstm_step", "input", in.size(), w.dim(1));
  Var<T> z = affine(pb("core/w"), in, pb("core/b"));
  Var<T> i = sigmoid(slice(z, 0, H));
  Var<T> f = sigmoid(slice(z, H, H));
  Var<T> g = tanh(slice(z, 2 * H, H));
  Var<T> o = sigmoid(slice(z, 3 * H, H));
  Var<T> c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

template <typename T>
Var<T> ff_step(ParamBinding<T>& pb, Var<T> x, std::optional<Var<T>> m) {
  using namespace diffcore;
  Var<T> in = m ? concat({x, *m}) : x;
  require_width("ff_step", "input", in.size(), pb.params().at("core/w1").dim(1));
  Var<T> z = relu(affine(pb("core/w1"), in, pb("core/b1")));
  return tanh(affine(pb("core/w2"), z, pb("core/b2")));
}

template <typename T>
HeadsOutput<T> heads(ParamBinding<T>& pb, Var<T> h) {
  using namespace diffcore;
  require_width("heads", "hidden", h.size(), pb.params().at("heads/policy_w").dim(1));
  Var<T> logits = affine(pb("heads/policy_w"), h, pb("heads/policy_b"));
  Var<T> value = reshape(affine(pb("heads/value_w"), h, pb("heads/value_b")), Shape{});
  return {logits, value};
}

#define MRA_CONTROLLER_INSTANTIATE(T)                                                                  \
  template void init_controller_params<T>(ParameterSet<T>&, const ControllerConfig&, diffcore::Rng&);  \
  template Var<T> encode<T>(ParamBinding<T>&, const ControllerConfig&, Var<T>);                       \
  template LstmState<T> lstm_step<T>(ParamBinding<T>&, Var<T>, std::optional<Var<T>>, LstmState<T>); \
  template Var<T> ff_step<T>(ParamBinding<T>&, Var<T>, std::optional<Var<T>>);                        \
  template HeadsOutput<T> heads<T>(ParamBinding<T>&, Var<T>);

MRA_CONTROLLER_INSTANTIATE(float)
MRA_CONTROLLER_INSTANTIATE(double)

}  // namespace mra::controller
