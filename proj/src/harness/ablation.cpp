// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/harness/ablation.hpp"

#include <algorithm>

#include "mra/common/errors.hpp"

namespace mra::harness {

using controller::CoreKind;
using learner::AuxKind;

std::string AblationConfig::name() const {
  std::string s = core == CoreKind::kLstm ? "LSTM" : "FF";
  if (mem) s += "+MEM";
  if (aux == AuxKind::kCpc) s += "+CPC";
  if (aux == AuxKind::kRec) s += "+REC";
  if (!jumpy) s += "-noJB";
  return s;
}

const std::vector<AblationConfig>& ablation_configs() {
  static const std::vector<AblationConfig> all = {
      {CoreKind::kLstm, true, AuxKind::kCpc, true},          {CoreKind::kLstm, true, AuxKind::kRec, true},
      {CoreKind::kLstm, true, AuxKind::kNone, true},         {CoreKind::kLstm, false, AuxKind::kCpc, true},
      {CoreKind::kFeedForward, true, AuxKind::kRec, true},   {CoreKind::kFeedForward, true, AuxKind::kCpc, true},
      {CoreKind::kLstm, false, AuxKind::kNone, true},        {CoreKind::kFeedForward, true, AuxKind::kNone, true},
      {CoreKind::kFeedForward, false, AuxKind::kNone, true}, {CoreKind::kLstm, true, AuxKind::kCpc, false},
  };
  return all;
}

AblationConfig parse_ablation(const std::string& name) {
  std::string n = name;
  if (n == "MRA") n = "LSTM+MEM+CPC";
  if (n == "MRA-noJB") n = "LSTM+MEM+CPC-noJB";
  for (const AblationConfig& c : ablation_configs()) {
    if (c.name() == n) return c;
  }
  throw ContractError("unknown ablation config '" + name + "'");
}

std::vector<std::string> audit_param_ids(const AblationConfig& cfg, const std::vector<std::string>& ids) {
  auto has = [&](const std::string& id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); };
  auto any_prefix = [&](const std::string& prefix) {
    return std::any_of(ids.begin(), ids.end(), [&](const std::string& id) { return id.rfind(prefix, 0) == 0; });
  };
  std::vector<std::string> problems;
  auto expect = [&](bool want, bool got, const std::string& what) {
    if (want && !got) problems.push_back("missing " + what);
    if (!want && got) problems.push_back("unexpected " + what);
  };
  const bool lstm = cfg.core == CoreKind::kLstm;
  expect(lstm, has("core/w") && has("core/b"), "LSTM core parameters");
  expect(!lstm, has("core/w1") && has("core/w2"), "feed-forward core parameters");
  expect(cfg.mem, any_prefix("mem/"), "memory parameters");
  expect(cfg.aux == AuxKind::kCpc, any_prefix("cpc/"), "CPC parameters");
  expect(cfg.aux == AuxKind::kRec, any_prefix("rec/"), "REC parameters");
  expect(true, any_prefix("encoder/"), "encoder parameters");
  expect(true, has("heads/policy_w") && has("heads/value_w"), "head parameters");
  for (const std::string& id : ids) {
    static const char* known[] = {"encoder/", "core/", "heads/", "mem/", "cpc/", "rec/"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char* p) { return id.rfind(p, 0) == 0; })) {
      problems.push_back("unknown parameter " + id);
    }
  }
  return problems;
}

}  // namespace mra::harness
