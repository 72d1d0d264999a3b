// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include <gtest/gtest.h>

#include "erosion/errors.hpp"
#include "erosion/io.hpp"
#include "erosion/report.hpp"
#include "test_support.hpp"

namespace erosion {
namespace {

MetricsRecord metrics(double wer, double h_p, double rep, double pass = 0.0) {
  MetricsRecord m;
  m.wer = wer;
  m.h_p = h_p;
  m.repetition = rep;
  m.pass_rate = pass;
  m.sample_count = 10;
  return m;
}

// Grid {0.03, 0.5, 1.0}: entropy peaks at 0.5 and collapses at 1.
ScalingReport scaling_fixture(std::size_t reps) {
  ScalingReport s;
  s.alpha_grid = {0.03, 0.5, 1.0};
  s.replicates = reps;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t r = 0; r < reps; ++r) {
      ScalingRow row;
      row.alpha = s.alpha_grid[a];
      row.replicate = r;
      row.seed = 100 + r;
      row.params_hash = "h";
      const double h[] = {3.1, 3.4 + 0.01 * r, 2.2};
      const double w[] = {0.3, 0.1, 0.05 + 1.0 / 30.0};
      const double rep[] = {0.01, 0.02, 0.3};
      row.metrics = metrics(w[a], h[a], rep[a], 0.25);
      s.rows.push_back(row);
    }
  }
  return s;
}

SystemResult system(const std::string& name, double wer, double h_p, double rep,
                    std::string params = "p") {
  SystemResult s;
  s.system = name;
  s.stage1_hash = "s1";
  s.params_hash = std::move(params);
  s.metrics = metrics(wer, h_p, rep);
  return s;
}

ComparisonReport alignment_fixture() {
  ComparisonReport c;
  c.kind = "alignment";
  c.alpha = 0.8;
  c.replicates = 3;
  for (std::size_t r = 0; r < 3; ++r) {
    const std::uint64_t seed = 10 + r;
    c.rows.push_back({r, seed, system("sft", 0.20, 3.0, 0.05, "s1")});
    c.rows.push_back({r, seed, system("standard_dpo", 0.25, 2.9, 0.05)});
    c.rows.push_back({r, seed, system("rejection_sampling", 0.15, 3.05, 0.04, "s1")});
    // Replicate 2 misses parity.
    c.rows.push_back({r, seed, system("dgsa", r == 2 ? 0.30 : 0.205, 3.2, 0.03)});
    c.rows.back().system.weights = WeightPair{0.4, 0.6};
  }
  return c;
}

ComparisonReport tdsc_fixture(bool dirty_loser) {
  ComparisonReport c;
  c.kind = "tdsc";
  c.alpha = 1.0;
  c.replicates = 1;
  c.rows.push_back({0, 5, system("sft", 0.5, 2.0, 0.2, "s1")});
  c.rows.push_back({0, 5, system("self_training", 0.45, 2.0, 0.2)});
  c.rows.push_back({0, 5, system("rejection_sampling", 0.4, 2.0, 0.2, "s1")});
  c.rows.push_back({0, 5, system("tdsc", 0.3, 2.1, 0.1)});
  const double wer[] = {0.5, 0.45, 0.4, 0.38, 0.36, 0.3};
  const double pass[] = {0.2, 0.25, 0.3, 0.4, 0.5, 0.6};
  const double h[] = {2.0, 1.9, 1.8, 1.85, 1.9, 1.95};
  for (std::size_t k = 0; k < 6; ++k) {
    RoundRow row;
    row.system = "tdsc";
    row.k = k;
    row.t_high = 0.8 + 0.1 * static_cast<double>(k);
    row.pool = metrics(wer[k], h[k], 0.1, pass[k]);
    row.accepted = 10 * k;
    row.rejected = 60 - 10 * k;
    row.pairs = k;
    c.rounds.push_back(row);
  }
  LoserAudit a;
  a.system = "tdsc";
  a.length_ratio = 1.2;
  a.repetition = 0.0;
  a.length_ok = true;
  a.repetition_ok = !dirty_loser;
  c.losers.push_back(a);
  return c;
}

const TrendCheck& check(const std::vector<TrendCheck>& checks, const std::string& name) {
  auto it = std::find_if(checks.begin(), checks.end(),
                         [&](const TrendCheck& c) { return c.name == name; });
  if (it == checks.end()) throw std::runtime_error("missing check " + name);
  return *it;
}

TEST(Majority, StrictlyMoreThanHalf) {
  EXPECT_TRUE(majority({true}));
  EXPECT_FALSE(majority({}));
  EXPECT_TRUE(majority({true, true, false}));
  EXPECT_FALSE(majority({true, false}));
  EXPECT_FALSE(majority({true, false, false}));
}

TEST(ScalingChecks, PassOnATextbookSweep) {
  const auto checks = scaling_checks(scaling_fixture(3));
  ASSERT_EQ(checks.size(), 3u);
  for (const auto& c : checks) {
    EXPECT_TRUE(c.passed) << c.name;
    EXPECT_EQ(c.per_replicate.size(), 3u);
  }
  EXPECT_EQ(scaling_fixture(3).peak_alpha(), 0.5);
}

TEST(ScalingChecks, DetectAMonotoneEntropyCurve) {
  ScalingReport s = scaling_fixture(3);
  for (std::size_t r = 0; r < 3; ++r) s.rows[3 + r].metrics.h_p = 2.5;
  EXPECT_FALSE(check(scaling_checks(s), "scaling.interior_entropy_peak").passed);
  EXPECT_TRUE(check(scaling_checks(s), "scaling.erosion_tail").passed);
}

TEST(ScalingChecks, ShortGridsOmitInteriorChecks) {
  ScalingReport s;
  s.alpha_grid = {0.1, 1.0};
  s.replicates = 1;
  s.rows = {ScalingRow{0.1, 0, 1, {}, "h", metrics(0.3, 3.0, 0.0)},
            ScalingRow{1.0, 0, 1, {}, "h", metrics(0.1, 2.0, 0.2)}};
  const auto checks = scaling_checks(s);
  ASSERT_EQ(checks.size(), 1u);
  EXPECT_EQ(checks[0].name, "scaling.synthetic_stability");
}

TEST(AlignmentChecks, MajorityVotesAndRejectionSamplingRule) {
  const auto checks = alignment_checks(alignment_fixture());
  const TrendCheck& parity = check(checks, "alignment.dgsa_wer_parity");
  EXPECT_EQ(parity.per_replicate, (std::vector<bool>{true, true, false}));
  EXPECT_TRUE(parity.passed);
  EXPECT_TRUE(check(checks, "alignment.dgsa_diversity").passed);
  EXPECT_TRUE(check(checks, "alignment.standard_dpo_wer").passed);
  EXPECT_TRUE(check(checks, "alignment.rejection_sampling_marginal").passed);

  ComparisonReport moved = alignment_fixture();
  for (auto& row : moved.rows) {
    if (row.system.system == "rejection_sampling") row.system.params_hash = "changed";
  }
  EXPECT_FALSE(check(alignment_checks(moved), "alignment.rejection_sampling_marginal").passed);

  ComparisonReport both = alignment_fixture();
  for (auto& row : both.rows) {
    if (row.system.system == "rejection_sampling") {
      row.system.metrics.wer = 0.201;
      row.system.metrics.h_p = 3.1;
    }
  }
  EXPECT_FALSE(check(alignment_checks(both), "alignment.rejection_sampling_marginal").passed);
}

TEST(TdscChecks, RoundSeriesAndAudit) {
  const auto checks = tdsc_checks(tdsc_fixture(false));
  for (const char* name : {"tdsc.wer_reduction", "tdsc.pass_rate_rise", "tdsc.entropy_recovery",
                           "tdsc.beats_self_training", "audit.mined_losers_filtered"}) {
    EXPECT_TRUE(check(checks, name).passed) << name;
  }
  EXPECT_FALSE(check(tdsc_checks(tdsc_fixture(true)), "audit.mined_losers_filtered").passed);
}

TEST(ReportCsv, ScalingRoundTripsExactly) {
  const ScalingReport s = scaling_fixture(2);
  const std::string text = scaling_csv(s);
  EXPECT_EQ(text.substr(0, text.find('\n')), "alpha,replicate,seed,wer,h_p_bits,repetition,pass_rate");
  const ScalingReport back = parse_scaling_csv(text);
  EXPECT_EQ(scaling_csv(back), text);
  EXPECT_EQ(back.alpha_grid, s.alpha_grid);
  EXPECT_EQ(back.replicates, 2u);
  EXPECT_EQ(back.row(2, 1).metrics.wer, 0.05 + 1.0 / 30.0);
  EXPECT_THROW(parse_scaling_csv("alpha,replicate\n1,2\n"), IoError);
}

TEST(ReportCsv, ComparisonRoundsAndLosersRoundTrip) {
  const ComparisonReport c = tdsc_fixture(false);
  const ComparisonReport back = parse_comparison_csv("tdsc", comparison_csv(c));
  EXPECT_EQ(comparison_csv(back), comparison_csv(c));
  EXPECT_EQ(back.find(0, "tdsc").metrics.wer, 0.3);
  const auto rounds = parse_rounds_csv("tdsc", 0, rounds_csv(c.rounds));
  EXPECT_EQ(rounds_csv(rounds), rounds_csv(c.rounds));
  EXPECT_EQ(rounds_csv(c.rounds).substr(0, rounds_csv(c.rounds).find('\n')),
            "k,t_high,pass_rate,wer,h_p_bits,repetition,accepted,rejected,pairs");
  EXPECT_EQ(losers_csv(parse_losers_csv(losers_csv(c.losers))), losers_csv(c.losers));
  EXPECT_THROW(c.find(0, "nothing"), DomainError);
}

TEST(ReportFiles, ChecksFromDiskMatchChecksInMemory) {
  const auto dir = testing::scratch_dir("report_files");
  const ScalingReport s = scaling_fixture(3);
  const ComparisonReport a = alignment_fixture();
  const ComparisonReport t = tdsc_fixture(false);
  write_scaling_report(s, dir);
  write_comparison_report(a, dir);
  write_comparison_report(t, dir);
  const DirectoryReports loaded = load_reports(dir);
  ASSERT_TRUE(loaded.scaling && loaded.alignment && loaded.tdsc);
  auto passes = [](const std::vector<TrendCheck>& cs) {
    std::vector<std::pair<std::string, std::vector<bool>>> out;
    for (const auto& c : cs) out.emplace_back(c.name, c.per_replicate);
    return out;
  };
  EXPECT_EQ(passes(scaling_checks(*loaded.scaling)), passes(scaling_checks(s)));
  EXPECT_EQ(passes(alignment_checks(*loaded.alignment)), passes(alignment_checks(a)));
  EXPECT_EQ(passes(tdsc_checks(*loaded.tdsc)), passes(tdsc_checks(t)));
  const std::string summary = write_summary(dir);
  EXPECT_EQ(read_file(dir / "summary.txt"), summary);
  EXPECT_NE(summary.find("scaling.interior_entropy_peak"), std::string::npos);
  EXPECT_NE(summary.find("audit.mined_losers_filtered"), std::string::npos);
}

TEST(ReportFiles, EmptyDirectoryLoadsNothing) {
  const auto dir = testing::scratch_dir("report_empty");
  const DirectoryReports loaded = load_reports(dir);
  EXPECT_FALSE(loaded.scaling || loaded.alignment || loaded.tdsc);
}

TEST(RunManifest, RecordsStatusAndConfig) {
  const auto dir = testing::scratch_dir("manifest");
  RunManifest m;
  m.command = "sweep scaling";
  m.status = "complete";
  m.add_stages(scaling_fixture(1));
  m.write(dir);
  const auto doc = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(doc.at("command"), "sweep scaling");
  EXPECT_EQ(doc.at("status"), "complete");
  EXPECT_FALSE(doc.at("stages").empty());
  EXPECT_EQ(doc.at("config_hash"), config_hash(m.config));
}

}  // namespace
}  // namespace erosion
