// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Score reports reduced from saved run directories. Scores are
// oracle-normalized: 0 is the random policy, 100 the scripted oracle.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mra/harness/runner.hpp"

namespace mra::harness {

struct ReportRow {
  std::string config;
  std::string family;
  std::string level;  // train, interpolate, extrapolate
  double score = 0.0;
  double stderr_ = 0.0;
  std::size_t seeds = 0;
  // Mean raw reward at the snapshots.
  double reward = 0.0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ManifestEntry {
  std::string family;
  std::string config;
  std::uint64_t seed = 0;
  std::string status;  // "ok" or "failed: ..."
  std::uint64_t frames = 0;
  double wall_seconds = 0.0;
  std::uint64_t snapshot_step = 0;
  std::string dir;
};

struct ScoreReport {
  std::vector<ReportRow> rows;
  std::vector<ManifestEntry> runs;
};

// Reads every run directory below `root`. Failed runs appear in the manifest
// and contribute no scores.
ScoreReport build_report(const std::filesystem::path& root);

std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& text);
std::string manifest_csv(const std::vector<ManifestEntry>& runs);

// Models and tasks ordered by mean train score, highest first.
struct HeatmapOrder {
  std::vector<std::string> configs;
  std::vector<std::string> families;
};
HeatmapOrder heatmap_order(const std::vector<ReportRow>& rows);
// One grid per level in heatmap order; "-" marks missing cells.
std::string heatmap_text(const std::vector<ReportRow>& rows);

// Writes report.csv, heatmap.txt and manifest.csv into `out_dir`.
// ContractError when the report has no rows.
void emit_report(const ScoreReport& report, const std::filesystem::path& out_dir);

}  // namespace mra::harness
