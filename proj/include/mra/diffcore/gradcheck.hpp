// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference check of tape gradients. Stop-gradient sites are
// recorded on the unperturbed pass and replayed verbatim on perturbed passes,
// so the numeric derivative only sees live branches.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>

#include "mra/diffcore/params.hpp"

namespace mra::diffcore {

template <typename T>
using ScalarFn = std::function<Var<T>(ParamBinding<T>&)>;

template <typename T>
struct GradCheckReport {
  // max |analytic - numeric| / max(1e-8, |analytic| + |numeric|) per parameter
  std::map<std::string, T> max_rel_error;
  T max_error = 0;
  std::string worst_param;
  std::size_t elements_checked = 0;
  // Number of stop_gradient sites held fixed during perturbation.
  std::size_t frozen_branches = 0;
  T tolerance = 0;

  bool passed() const { return max_error < tolerance; }
};

struct GradCheckOptions {
  // 0 checks every element; otherwise an evenly strided subset per parameter.
  std::size_t max_elements_per_param = 0;
};

// `f` must be scalar-valued and deterministic; a mismatch between two
// identical forward passes raises ContractError.
template <typename T>
GradCheckReport<T> grad_check(const ScalarFn<T>& f, ParameterSet<T>& inputs, T h, T tol,
                              GradCheckOptions options = {});

}  // namespace mra::diffcore
