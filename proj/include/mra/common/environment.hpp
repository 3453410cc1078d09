// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "mra/common/observation.hpp"

namespace mra {

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  std::map<std::string, double> info;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual ObservationSpec observation_spec() const = 0;
  virtual std::size_t num_actions() const = 0;
  // Starts the next episode.
  virtual Observation reset() = 0;
  virtual StepResult step(int action) = 0;
};

}  // namespace mra
