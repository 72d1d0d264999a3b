// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "erosion/errors.hpp"
#include "erosion/judge.hpp"
#include "erosion/parallel.hpp"
#include "erosion/tdsc.hpp"
#include "test_support.hpp"

namespace erosion {
namespace {

using testing::random_policy;
using testing::tiny_world;

Candidate make_candidate(std::size_t index, double wer, bool len_ok, bool rep_ok,
                         double temperature = 1.0, const JudgeConfig& judge = {}) {
  Candidate c;
  c.index = index;
  c.temperature = temperature;
  c.utterance.tokens = TokenSequence(index + 1, static_cast<Token>(index));
  c.verdict.wer = wer;
  if (!(wer < judge.tau_wer)) c.verdict.failure_reasons |= kFailWer;
  if (!len_ok) c.verdict.failure_reasons |= kFailLength;
  if (!rep_ok) c.verdict.failure_reasons |= kFailRepetition;
  c.verdict.accepted = c.verdict.failure_reasons == 0;
  return c;
}

TEST(Judge, TabulatedExamples) {
  const JudgeConfig j;
  const JudgeVerdict ok = apply_criteria(0.20, 0.05, 10, 10, j);
  EXPECT_TRUE(ok.accepted);
  EXPECT_EQ(ok.failure_reasons, 0);
  EXPECT_EQ(ok.length_ratio, 1.0);
  const JudgeVerdict high_wer = apply_criteria(0.45, 0.05, 10, 10, j);
  EXPECT_FALSE(high_wer.accepted);
  EXPECT_EQ(high_wer.failure_reasons, kFailWer);
  const JudgeVerdict long_one = apply_criteria(0.20, 0.05, 23, 10, j);
  EXPECT_FALSE(long_one.accepted);
  EXPECT_EQ(long_one.failure_reasons, kFailLength);
  EXPECT_DOUBLE_EQ(long_one.length_ratio, 2.3);
  EXPECT_EQ(describe_reasons(kFailWer | kFailLength), "wer|length");
}

TEST(Judge, BoundariesAreStrictForThresholdsAndInclusiveForLength) {
  const JudgeConfig j;
  EXPECT_TRUE(apply_criteria(0.40, 0.0, 10, 10, j).failed(kFailWer));
  EXPECT_TRUE(apply_criteria(0.0, 0.10, 10, 10, j).failed(kFailRepetition));
  EXPECT_TRUE(apply_criteria(0.0, 0.0, 5, 10, j).accepted);
  EXPECT_TRUE(apply_criteria(0.0, 0.0, 20, 10, j).accepted);
  EXPECT_TRUE(apply_criteria(0.0, 0.0, 4, 10, j).failed(kFailLength));
  EXPECT_TRUE(apply_criteria(0.0, 0.0, 21, 10, j).failed(kFailLength));
}

TEST(Judge, SoundAgainstIndependentReevaluation) {
  const World w = tiny_world(4, 3, 6, 8);
  const JudgeConfig j;
  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const Prompt& p = w.prompt(static_cast<std::uint32_t>(rng.index(6)));
    TokenSequence y(rng.index(20));
    const bool loopy = rng.bernoulli(0.3);
    for (auto& t : y) t = loopy ? 5 : static_cast<Token>(rng.index(w.vocab().size()));
    Rng judge_rng(0);
    const JudgeVerdict v = judge_candidate(w, p, y, j, judge_rng);
    const double wer = wer_proxy(p.canonical, decode_tokens(w.vocab(), y));
    const double rep = repetition_rate(y, 4);
    const double ratio = static_cast<double>(y.size()) / static_cast<double>(p.length());
    const bool wer_ok = wer < 0.40, rep_ok = rep < 0.10, len_ok = ratio >= 0.5 && ratio <= 2.0;
    ASSERT_EQ(v.accepted, wer_ok && rep_ok && len_ok);
    ASSERT_EQ(v.failed(kFailWer), !wer_ok);
    ASSERT_EQ(v.failed(kFailRepetition), !rep_ok);
    ASSERT_EQ(v.failed(kFailLength), !len_ok);
    ASSERT_EQ(v.accepted, v.failure_reasons == 0);
  }
}

TEST(Judge, ConfigValidation) {
  JudgeConfig j;
  j.gamma_max = 0.4;
  EXPECT_THROW(j.validate(), ConfigError);
  j = JudgeConfig{};
  j.asr_noise = 2.0;
  EXPECT_THROW(j.validate(), ConfigError);
}

TEST(TemperatureSchedule, Examples) {
  const TemperatureSchedule s;
  EXPECT_EQ(temperature_set_for_iteration(s, 0), (std::vector<double>{0.7, 1.0, 0.8}));
  EXPECT_NEAR(temperature_set_for_iteration(s, 5).back(), 1.3, 1e-12);
  TemperatureSchedule flat = s;
  flat.curriculum_rate = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_EQ(temperature_set_for_iteration(flat, k), temperature_set_for_iteration(flat, 0));
  }
  double prev = 0.0;
  for (std::size_t k = 0; k < 20; ++k) {
    const double t = temperature_set_for_iteration(s, k).back();
    ASSERT_GE(t, prev);
    prev = t;
  }
}

TEST(GenerateCandidates, DefaultsGiveFourPerTemperature) {
  const World w = tiny_world();
  const PolicyParams p = random_policy(w.vocab(), 1);
  const TemperatureSchedule s;
  const auto cands = generate_candidates(p, w.prompt(2), s, 0, 0.9, 7);
  ASSERT_EQ(cands.size(), 12u);
  for (double t : {0.7, 1.0, 0.8}) {
    EXPECT_EQ(std::count_if(cands.begin(), cands.end(),
                            [&](const Candidate& c) { return c.temperature == t; }),
              4);
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    EXPECT_EQ(cands[i].index, i);
    EXPECT_EQ(cands[i].utterance.temperature_used, cands[i].temperature);
  }
}

TEST(GenerateCandidates, DeterministicAndKeyedByIteration) {
  const World w = tiny_world();
  const PolicyParams p = random_policy(w.vocab(), 1);
  const TemperatureSchedule s;
  auto tokens = [&](std::size_t k, std::uint64_t seed) {
    std::vector<TokenSequence> out;
    for (const auto& c : generate_candidates(p, w.prompt(1), s, k, 0.9, seed)) {
      out.push_back(c.utterance.tokens);
    }
    return out;
  };
  EXPECT_EQ(tokens(0, 3), tokens(0, 3));
  EXPECT_NE(tokens(0, 3), tokens(1, 3));
}

TEST(GenerateCandidates, SingleTemperatureAblation) {
  const World w = tiny_world();
  const PolicyParams p = random_policy(w.vocab(), 1);
  TemperatureSchedule s;
  s.single_temperature = 1.0;
  const auto cands = generate_candidates(p, w.prompt(0), s, 3, 0.9, 1);
  ASSERT_EQ(cands.size(), 12u);
  for (const auto& c : cands) EXPECT_EQ(c.temperature, 1.0);
}

TEST(PartitionCandidates, DisjointAndExhaustive) {
  EXPECT_TRUE(partition_candidates({}).accepted.empty());
  EXPECT_TRUE(partition_candidates({}).rejected.empty());
  std::vector<JudgeVerdict> all(4);
  for (auto& v : all) v.accepted = true;
  EXPECT_TRUE(partition_candidates(all).rejected.empty());
  Rng rng(2);
  std::vector<JudgeVerdict> mixed(50);
  for (auto& v : mixed) v.accepted = rng.bernoulli(0.4);
  const CandidatePartition p = partition_candidates(mixed);
  EXPECT_EQ(p.accepted.size() + p.rejected.size(), mixed.size());
  for (auto i : p.accepted) EXPECT_TRUE(mixed[i].accepted);
  for (auto i : p.rejected) EXPECT_FALSE(mixed[i].accepted);
}

TEST(MinePairs, TabulatedExample) {
  const JudgeConfig j;
  const std::vector<Candidate> cands{make_candidate(0, 0.1, true, true),
                                     make_candidate(1, 0.3, true, true),
                                     make_candidate(2, 0.6, true, true),
                                     make_candidate(3, 0.5, false, true)};
  const auto t = mine_preference_pair(cands, j);
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->preferred.tokens, cands[0].utterance.tokens);
  EXPECT_EQ(t->dispreferred.tokens, cands[2].utterance.tokens);
  EXPECT_EQ(t->tag, ObjectiveTag::kTdsc);
}

TEST(MinePairs, MissingSidesGiveNoPair) {
  const JudgeConfig j;
  const std::vector<Candidate> no_winner{make_candidate(0, 0.6, true, true),
                                         make_candidate(1, 0.2, false, true)};
  EXPECT_FALSE(mine_preference_pair(no_winner, j).has_value());
  const std::vector<Candidate> no_loser{make_candidate(0, 0.1, true, true),
                                        make_candidate(1, 0.2, true, true),
                                        make_candidate(2, 0.9, true, false)};
  EXPECT_FALSE(mine_preference_pair(no_loser, j).has_value());
}

TEST(MinePairs, WinnerTiesPreferLowerTemperatureThenIndex) {
  const JudgeConfig j;
  const std::vector<Candidate> cands{make_candidate(0, 0.1, true, true, 1.0),
                                     make_candidate(1, 0.1, true, true, 0.7),
                                     make_candidate(2, 0.1, true, true, 0.7),
                                     make_candidate(3, 0.8, true, true, 0.7)};
  const auto t = mine_preference_pair(cands, j);
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->preferred.tokens, cands[1].utterance.tokens);
}

TEST(MinePairs, WinnerDominanceAndLoserFiltersOnRandomPools) {
  const JudgeConfig j;
  Rng rng(44);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < 12; ++i) {
      cands.push_back(make_candidate(i, std::round(rng.uniform() * 10) / 10, rng.bernoulli(0.8),
                                     rng.bernoulli(0.8)));
    }
    const auto t = mine_preference_pair(cands, j);
    if (!t) continue;
    const auto find = [&](const TokenSequence& y) {
      return *std::find_if(cands.begin(), cands.end(),
                           [&](const Candidate& c) { return c.utterance.tokens == y; });
    };
    const Candidate w = find(t->preferred.tokens);
    const Candidate l = find(t->dispreferred.tokens);
    ASSERT_TRUE(w.verdict.accepted);
    ASSERT_TRUE(l.verdict.length_ok());
    ASSERT_TRUE(l.verdict.repetition_ok());
    ASSERT_GE(l.verdict.wer, j.tau_wer);
    for (const auto& c : cands) {
      if (c.verdict.accepted) { ASSERT_LE(w.verdict.wer, c.verdict.wer); }
    }
  }
}

TEST(JudgeRound, ShuffledPromptOrderGivesIdenticalPerPromptOutputs) {
  const World w = tiny_world(4, 3, 12, 6);
  const PolicyParams p = random_policy(w.vocab(), 3);
  const TdscConfig c;
  std::vector<std::uint32_t> ids(12);
  std::iota(ids.begin(), ids.end(), 0u);
  std::vector<std::uint32_t> shuffled = ids;
  Rng rng(5);
  std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
  const auto a = judge_round(p, w, ids, c, 2, 99);
  const auto b = judge_round(p, w, shuffled, c, 2, 99);
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    const auto& x = a[shuffled[i]];
    const auto& y = b[i];
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      ASSERT_EQ(x[j].utterance, y[j].utterance);
      ASSERT_EQ(x[j].verdict.wer, y[j].verdict.wer);
    }
  }
}

TEST(JudgeRound, ThreadCountDoesNotChangeResults) {
  const World w = tiny_world(4, 3, 12, 6);
  const PolicyParams p = random_policy(w.vocab(), 3);
  TdscConfig c;
  c.judge.asr_noise = 0.1;
  std::vector<std::uint32_t> ids(12);
  std::iota(ids.begin(), ids.end(), 0u);
  set_worker_threads(1);
  const auto a = judge_round(p, w, ids, c, 0, 1);
  set_worker_threads(4);
  const auto b = judge_round(p, w, ids, c, 0, 1);
  set_worker_threads(1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      ASSERT_EQ(a[i][j].utterance, b[i][j].utterance);
      ASSERT_EQ(a[i][j].verdict.wer, b[i][j].verdict.wer);
    }
  }
}

class TdscLoop : public ::testing::Test {
 protected:
  void SetUp() override {
    Corpus corpus = build_mixed_corpus(world, 0, 60, 1);
    SftConfig sft;
    sft.steps = 60;
    params = init_policy(world.vocab());
    train_sft(params, world.prompts(), corpus.items(), sft, 2);
    train.preference.epochs = 3;
    for (const Prompt& p : world.prompts()) ids.push_back(p.id);
  }
  World world = tiny_world(4, 3, 8, 6);
  PolicyParams params;
  TrainConfig train;
  std::vector<std::uint32_t> ids;
};

TEST_F(TdscLoop, IterationLogIsConsistent) {
  TdscConfig c;
  PolicyParams p = params;
  const TdscIterationLog log = tdsc_iteration(p, world, ids, c, train, 0, 3);
  EXPECT_EQ(log.k, 0u);
  EXPECT_EQ(log.t_high, 0.8);
  EXPECT_EQ(log.candidates, 12u * ids.size());
  EXPECT_EQ(log.accepted + log.rejected, log.candidates);
  EXPECT_EQ(log.pairs, log.mined.size());
  EXPECT_EQ(log.pairs + log.prompts_without_pair, ids.size());
  EXPECT_DOUBLE_EQ(log.pass_rate, static_cast<double>(log.accepted) / log.candidates);
  EXPECT_FALSE(log.aborted);
  EXPECT_GT(log.sft_steps, 0u);
  if (log.pairs > 0) {
    // The reference is the entry snapshot, so the SFT pass already moves the margin.
    EXPECT_EQ(log.dpo_losses.size(), 3u);
    for (double l : log.dpo_losses) EXPECT_TRUE(std::isfinite(l) && l > 0.0);
  }
  EXPECT_NE(p, params);
}

TEST_F(TdscLoop, SftOnlyAblationMinesNothing) {
  TdscConfig c;
  c.disable_dpo = true;
  PolicyParams p = params;
  const TdscIterationLog log = tdsc_iteration(p, world, ids, c, train, 0, 3);
  EXPECT_EQ(log.pairs, 0u);
  EXPECT_TRUE(log.mined.empty());
  EXPECT_TRUE(log.dpo_losses.empty());
  const TdscConfig st = self_training_preset(TdscConfig{});
  EXPECT_TRUE(st.disable_dpo);
  EXPECT_EQ(st.schedule.single_temperature, 1.0);
}

TEST_F(TdscLoop, EmptyAcceptedSetAbortsWithoutUpdate) {
  TdscConfig c;
  c.judge.gamma_min = 5.0;
  c.judge.gamma_max = 6.0;
  PolicyParams p = params;
  const TdscIterationLog log = tdsc_iteration(p, world, ids, c, train, 0, 3);
  EXPECT_TRUE(log.aborted);
  EXPECT_EQ(log.accepted, 0u);
  EXPECT_EQ(p, params);
}

TEST_F(TdscLoop, RunIsDeterministicAndFollowsTheCurriculum) {
  TdscConfig c;
  c.iterations = 3;
  PolicyParams a = params, b = params;
  const TdscRun ra = run_tdsc(a, world, c, train, 8);
  const TdscRun rb = run_tdsc(b, world, c, train, 8);
  EXPECT_EQ(a, b);
  ASSERT_EQ(ra.iterations.size(), 3u);
  ASSERT_EQ(ra.rounds().size(), 4u);
  ASSERT_EQ(ra.pool_series().size(), 4u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(ra.iterations[k].k, k);
    EXPECT_NEAR(ra.iterations[k].t_high, 0.8 + 0.1 * k, 1e-12);
    EXPECT_EQ(ra.iterations[k].pass_rate, rb.iterations[k].pass_rate);
    EXPECT_EQ(ra.iterations[k].pool.wer, rb.iterations[k].pool.wer);
  }
  EXPECT_EQ(ra.probe.k, 3u);
  EXPECT_NEAR(ra.probe.t_high, 1.1, 1e-12);
  EXPECT_EQ(ra.probe.before.wer, ra.probe.after.wer);
}

TEST_F(TdscLoop, MinedLosersAlwaysPassLengthAndRepetition) {
  TdscConfig c;
  c.iterations = 3;
  PolicyParams p = params;
  const TdscRun run = run_tdsc(p, world, c, train, 4);
  for (const auto& log : run.rounds()) {
    for (const auto& t : log.mined) {
      const Prompt& prompt = world.prompt(t.prompt_id);
      const auto& y = t.dispreferred.tokens;
      const double ratio = static_cast<double>(y.size()) / static_cast<double>(prompt.length());
      ASSERT_GE(ratio, 0.5);
      ASSERT_LE(ratio, 2.0);
      ASSERT_LT(repetition_rate(y, 4), 0.10);
    }
  }
}

TEST(TdscConfig, Validation) {
  TdscConfig c;
  c.iterations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TdscConfig{};
  c.schedule.t_low = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TdscConfig{};
  c.sft_learning_rate = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace erosion
