// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mra/controller/controller.hpp"
#include "mra/learner/agent.hpp"

namespace mra::harness {

struct AblationConfig {
  controller::CoreKind core = controller::CoreKind::kLstm;
  bool mem = false;
  learner::AuxKind aux = learner::AuxKind::kNone;
  // Only meaningful for LSTM + MEM + CPC.
  bool jumpy = true;

  // Canonical name, e.g. "LSTM+MEM+CPC" or "LSTM+MEM+CPC-noJB".
  std::string name() const;
  friend bool operator==(const AblationConfig&, const AblationConfig&) = default;
};

// The ten ablations, in the order of the ranking table plus the no-jumpy
// variant last.
const std::vector<AblationConfig>& ablation_configs();

// Accepts canonical names and "MRA" / "MRA-noJB". Throws ContractError for
// anything outside the ten.
AblationConfig parse_ablation(const std::string& name);

// Problems found when a parameter-id set is compared with what the
// configuration must (and must not) contain; empty when consistent.
std::vector<std::string> audit_param_ids(const AblationConfig& cfg, const std::vector<std::string>& ids);

}  // namespace mra::harness
