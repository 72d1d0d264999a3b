// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Report files and trend checks. CSV numbers are printed in shortest
// round-trip form, so a report read back from disk yields the same checks
// as the in-memory one.
//
// Files written into an output directory:
//   scaling.csv            alpha,replicate,seed,wer,h_p_bits,repetition,pass_rate
//   scaling_mean.csv       alpha,wer,h_p_bits,repetition,pass_rate
//   alignment.csv          one row per (replicate, system)
//   tdsc_comparison.csv    one row per (replicate, system)
//   <system>_r<N>.csv      k,t_high,pass_rate,wer,h_p_bits,repetition,accepted,rejected,pairs
//   mined_losers.csv       independent filter audit of every mined loser
//   summary.txt            tables and trend checks for whatever is present
//   manifest.json          config snapshot, stage records, timing

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "erosion/config.hpp"
#include "erosion/lab.hpp"

namespace erosion {

struct TrendCheck {
  std::string name;
  std::string description;
  std::vector<bool> per_replicate;
  bool passed = false;
  std::string detail;
};

/// True when more than half of the entries are true.
bool majority(const std::vector<bool>& votes);

/// Interior entropy peak, WER gain from synthetic data, erosion tail.
/// Checks that need interior grid points are omitted for short grids.
std::vector<TrendCheck> scaling_checks(const ScalingReport& report);
/// DGSA against SFT, Standard DPO and Rejection Sampling.
std::vector<TrendCheck> alignment_checks(const ComparisonReport& report);
/// Round-series trends of TDSC, the Self-Training ordering and the loser audit.
std::vector<TrendCheck> tdsc_checks(const ComparisonReport& report);

std::string scaling_csv(const ScalingReport& report);
std::string scaling_mean_csv(const ScalingReport& report);
std::string comparison_csv(const ComparisonReport& report);
std::string rounds_csv(const std::vector<RoundRow>& rounds);
std::string losers_csv(const std::vector<LoserAudit>& losers);

/// Inverse of scaling_csv. Throws IoError on malformed input.
ScalingReport parse_scaling_csv(std::string_view text);
/// Inverse of comparison_csv (rounds and losers are left empty).
ComparisonReport parse_comparison_csv(std::string_view kind, std::string_view text);
/// Rows of one <system>_r<N>.csv file.
std::vector<RoundRow> parse_rounds_csv(std::string_view system, std::size_t replicate,
                                       std::string_view text);
std::vector<LoserAudit> parse_losers_csv(std::string_view text);

void write_scaling_report(const ScalingReport& report, const std::filesystem::path& dir);
void write_comparison_report(const ComparisonReport& report,
                             const std::filesystem::path& dir);

struct DirectoryReports {
  std::optional<ScalingReport> scaling;
  std::optional<ComparisonReport> alignment;
  std::optional<ComparisonReport> tdsc;
};

/// Loads every report CSV present in `dir`.
DirectoryReports load_reports(const std::filesystem::path& dir);

/// Tables and trend checks of every report found in `dir`.
std::string render_summary(const DirectoryReports& reports);
/// Writes summary.txt and returns its text.
std::string write_summary(const std::filesystem::path& dir);

nlohmann::ordered_json metrics_json(const MetricsRecord& m);

struct RunManifest {
  std::string command;
  ExperimentConfig config;
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  std::string status = "running";
  double wall_clock_seconds = 0.0;

  void add_stage(const std::string& name, nlohmann::ordered_json details);
  void add_stages(const ScalingReport& report);
  void add_stages(const ComparisonReport& report);
  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& dir) const;
};

}  // namespace erosion
