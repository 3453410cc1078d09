// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Float64 finite-difference checks of the main differentiable paths: one
// LSTM + memory step with a nonempty memory, the CPC loss, the REC loss and
// the RL loss on a short trajectory.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mra/diffcore/gradcheck.hpp"

namespace mra::harness {

struct NamedGradCheck {
  std::string name;
  diffcore::GradCheckReport<double> report;
};

std::vector<NamedGradCheck> standard_grad_checks(double h = 1e-5, double tol = 1e-4, std::uint64_t seed = 7);

}  // namespace mra::harness
