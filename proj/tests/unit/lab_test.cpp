// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include <gtest/gtest.h>

#include "erosion/errors.hpp"
#include "erosion/lab.hpp"
#include "erosion/parallel.hpp"
#include "erosion/report.hpp"
#include "test_support.hpp"

namespace erosion {
namespace {

using testing::small_experiment;

TEST(CorpusCounts, Examples) {
  const auto half = corpus_counts(0.5, 200, 1000);
  EXPECT_EQ(half.n_real, 200u);
  EXPECT_EQ(half.n_synthetic, 200u);
  const auto heavy = corpus_counts(0.8, 200, 1000);
  EXPECT_EQ(heavy.n_synthetic, 800u);
  const auto pure = corpus_counts(1.0, 200, 1000);
  EXPECT_EQ(pure.n_real, 0u);
  EXPECT_EQ(pure.n_synthetic, 1000u);
  EXPECT_EQ(corpus_counts(0.0, 200, 1000).n_synthetic, 0u);
  EXPECT_EQ(corpus_counts(0.03, 200, 1000).n_synthetic, 6u);
  EXPECT_THROW(corpus_counts(1.2, 200, 1000), DomainError);
}

TEST(ReplicateSeeds, DistinctAndPure) {
  std::set<std::uint64_t> seen;
  for (std::size_t r = 0; r < 50; ++r) {
    EXPECT_EQ(replicate_seed(7, r), derive_seed(7, "replicate", r));
    seen.insert(replicate_seed(7, r));
  }
  EXPECT_EQ(seen.size(), 50u);
  EXPECT_NE(evaluation_seed(3), 3u);
}

TEST(Stage1, CorpusRatioAndSharedCheckpoint) {
  const ExperimentConfig c = small_experiment();
  const std::uint64_t seed = replicate_seed(c.seed, 0);
  const World w = replicate_world(c, seed);
  const Corpus corpus = stage1_corpus(c, w, 0.8, seed);
  EXPECT_EQ(corpus.real_count(), 30u);
  EXPECT_EQ(corpus.synthetic_count(), 120u);
  EXPECT_DOUBLE_EQ(corpus.alpha(), 0.8);
  const Stage1 a = train_stage1(c, w, 0.8, seed);
  const Stage1 b = train_stage1(c, w, 0.8, seed);
  EXPECT_EQ(a.policy.hash(), b.policy.hash());
  EXPECT_EQ(a.sft.steps, c.train.sft.steps);
}

TEST(RunMethod, SystemsShareStage1AndKeepTheirContracts) {
  const ExperimentConfig c = small_experiment();
  const std::uint64_t seed = replicate_seed(c.seed, 0);
  const World w = replicate_world(c, seed);
  const Stage1 s1 = train_stage1(c, w, 0.8, seed);
  const MethodRun sft = run_method(c, Method::kSft, w, s1, seed);
  const MethodRun rs = run_method(c, Method::kRejectionSampling, w, s1, seed);
  const MethodRun sdpo = run_method(c, Method::kStandardDpo, w, s1, seed);
  const MethodRun dgsa = run_method(c, Method::kDgsa, w, s1, seed);
  for (const MethodRun* m : {&sft, &rs, &sdpo, &dgsa}) {
    EXPECT_EQ(m->result.stage1_hash, s1.policy.hash());
  }
  EXPECT_EQ(sft.result.params_hash, s1.policy.hash());
  EXPECT_EQ(rs.result.params_hash, s1.policy.hash());
  EXPECT_NE(dgsa.result.params_hash, s1.policy.hash());
  EXPECT_EQ(sdpo.result.weights.lambda_s, 0.0);
  EXPECT_EQ(sdpo.result.weights.lambda_e, 1.0);
  ASSERT_TRUE(dgsa.dgsa.has_value());
  EXPECT_NEAR(dgsa.result.weights.lambda_s + dgsa.result.weights.lambda_e, 1.0, 1e-12);
  EXPECT_EQ(sft.result.system, "sft");
  EXPECT_EQ(rs.result.system, "rejection_sampling");
}

TEST(RunMethod, SelfTrainingMinesNoPairs) {
  const ExperimentConfig c = small_experiment();
  const std::uint64_t seed = replicate_seed(c.seed, 0);
  const World w = replicate_world(c, seed);
  const Stage1 s1 = train_stage1(c, w, 1.0, seed);
  EXPECT_EQ(s1.corpus.real_count(), 0u);
  const MethodRun st = run_method(c, Method::kSelfTraining, w, s1, seed);
  ASSERT_TRUE(st.tdsc.has_value());
  for (const auto& log : st.tdsc->rounds()) {
    if (log.k < c.tdsc.iterations) {
      EXPECT_EQ(log.pairs, 0u);
    }
  }
  EXPECT_THROW(run_method(c, Method::kDgsa, w, s1, seed), PreconditionError);
}

TEST(ScalingSweep, ShapeAndDeterminismAcrossThreadCounts) {
  const ExperimentConfig c = small_experiment();
  set_worker_threads(1);
  const ScalingReport a = run_scaling_sweep(c);
  set_worker_threads(3);
  const ScalingReport b = run_scaling_sweep(c);
  set_worker_threads(1);
  EXPECT_EQ(a.rows.size(), 6u);
  EXPECT_EQ(scaling_csv(a), scaling_csv(b));
  EXPECT_EQ(a.row(2, 1).counts.n_real, 0u);
  EXPECT_EQ(a.row(2, 1).counts.n_synthetic, 120u);
  EXPECT_EQ(a.row(1, 0).counts.n_synthetic, 30u);
}

TEST(AlignmentComparison, RowsAndPreconditions) {
  ExperimentConfig c = small_experiment();
  const ComparisonReport r = run_alignment_comparison(c);
  EXPECT_EQ(r.rows.size(), 8u);
  for (std::size_t rep = 0; rep < 2; ++rep) {
    const std::string& s1 = r.find(rep, "sft").stage1_hash;
    for (const char* name : {"standard_dpo", "rejection_sampling", "dgsa"}) {
      EXPECT_EQ(r.find(rep, name).stage1_hash, s1);
    }
  }
  EXPECT_EQ(alignment_checks(r).size(), 4u);
  c.alpha = 1.0;
  EXPECT_THROW(run_alignment_comparison(c), PreconditionError);
}

TEST(TdscComparison, PureSyntheticStartAndCleanAudit) {
  const ExperimentConfig c = small_experiment();
  const ComparisonReport a = run_tdsc_comparison(c);
  const ComparisonReport b = run_tdsc_comparison(c);
  EXPECT_EQ(comparison_csv(a), comparison_csv(b));
  EXPECT_EQ(rounds_csv(a.rounds), rounds_csv(b.rounds));
  EXPECT_EQ(a.alpha, 1.0);
  EXPECT_EQ(a.rows.size(), 8u);
  std::size_t tdsc_rounds = 0;
  for (const RoundRow& row : a.rounds) tdsc_rounds += row.system == "tdsc";
  EXPECT_EQ(tdsc_rounds, 2u * (c.tdsc.iterations + 1));
  for (const LoserAudit& l : a.losers) {
    EXPECT_TRUE(l.length_ok && l.repetition_ok);
    EXPECT_EQ(l.system, "tdsc");
  }
}

}  // namespace
}  // namespace erosion
