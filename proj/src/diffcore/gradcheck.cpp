// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mra/common/errors.hpp"

namespace mra::diffcore {
namespace {

template <typename T>
T evaluate(const ScalarFn<T>& f, const ParameterSet<T>& params, FreezeLog<T>& log) {
  Tape<T> tape;
  tape.set_freeze_log(&log);
  ParamBinding<T> binding(tape, params);
  log.cursor = 0;
  const Var<T> loss = f(binding);
  if (loss.size() != 1) throw ContractError("grad_check: function is not scalar-valued");
  return loss.value()[0];
}

}  // namespace

template <typename T>
GradCheckReport<T> grad_check(const ScalarFn<T>& f, ParameterSet<T>& inputs, T h, T tol,
                              GradCheckOptions options) {
  if (!(h > T(0))) throw ContractError("grad_check: step must be positive");
  GradCheckReport<T> report;
  report.tolerance = tol;

  FreezeLog<T> log;
  log.mode = FreezeLog<T>::Mode::kRecord;
  GradientMap<T> analytic;
  T base = 0;
  {
    Tape<T> tape;
    tape.set_freeze_log(&log);
    ParamBinding<T> binding(tape, inputs);
    const Var<T> loss = f(binding);
    if (loss.size() != 1) throw ContractError("grad_check: function is not scalar-valued");
    base = loss.value()[0];
    tape.backward(loss);
    analytic = binding.gradients();
    report.frozen_branches = tape.stop_gradient_count();
  }
  log.mode = FreezeLog<T>::Mode::kReplay;
  const T again = evaluate(f, inputs, log);
  if (std::memcmp(&again, &base, sizeof(T)) != 0) {
    throw ContractError("grad_check: non-deterministic function, two forward passes disagree");
  }

  for (auto& [id, tensor] : inputs) {
    const std::size_t n = tensor.size();
    std::size_t stride = 1;
    if (options.max_elements_per_param > 0 && n > options.max_elements_per_param) {
      stride = (n + options.max_elements_per_param - 1) / options.max_elements_per_param;
    }
    T worst = 0;
    const Tensor<T>& ga = analytic.at(id);
    for (std::size_t i = 0; i < n; i += stride) {
      const T saved = tensor[i];
      tensor[i] = saved + h;
      const T plus = evaluate(f, inputs, log);
      tensor[i] = saved - h;
      const T minus = evaluate(f, inputs, log);
      tensor[i] = saved;
      const T numeric = (plus - minus) / (T(2) * h);
      const T a = ga[i];
      const T rel = std::abs(a - numeric) / std::max(T(1e-8), std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
      ++report.elements_checked;
    }
    report.max_rel_error[id] = worst;
    if (worst >= report.max_error) {
      report.max_error = worst;
      report.worst_param = id;
    }
  }
  return report;
}

template GradCheckReport<float> grad_check<float>(const ScalarFn<float>&, ParameterSet<float>&, float, float,
                                                  GradCheckOptions);
template GradCheckReport<double> grad_check<double>(const ScalarFn<double>&, ParameterSet<double>&, double,
                                                    double, GradCheckOptions);

}  // namespace mra::diffcore
