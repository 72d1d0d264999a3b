// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Temperature-driven self-critique: sample candidates across a temperature
// gradient, judge them, fine-tune on the accepted set, then run DPO on
// mined (winner, loser) pairs. The upper temperature rises each iteration.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "erosion/align.hpp"
#include "erosion/diagnostics.hpp"
#include "erosion/judge.hpp"
#include "erosion/policy.hpp"
#include "erosion/world.hpp"

namespace erosion {

struct TemperatureSchedule {
  double t_low = 0.7;
  double t_mid = 1.0;
  double t_high_initial = 0.8;
  double curriculum_rate = 0.1;
  std::size_t candidates_per_temperature = 4;
  /// When set, all three slots use this temperature.
  std::optional<double> single_temperature;

  void validate() const;
};

/// {t_low, t_mid, t_high_initial + rate * k}, or three copies of the
/// single temperature.
std::vector<double> temperature_set_for_iteration(const TemperatureSchedule& schedule,
                                                  std::size_t k);

struct Candidate {
  Utterance utterance;
  double temperature = 1.0;
  /// Generation index within the prompt (temperature-major).
  std::size_t index = 0;
  JudgeVerdict verdict;
};

/// candidates_per_temperature samples per temperature slot. Candidate i of
/// prompt p at iteration k uses the stream (seed, "tdsc.cand", p, k, i).
std::vector<Candidate> generate_candidates(const PolicyParams& params,
                                           const Prompt& prompt,
                                           const TemperatureSchedule& schedule,
                                           std::size_t k, double nucleus_p,
                                           std::uint64_t seed);

struct CandidatePartition {
  std::vector<std::size_t> accepted;
  std::vector<std::size_t> rejected;
};

CandidatePartition partition_candidates(std::span<const JudgeVerdict> verdicts);

/// Winner: accepted candidate with the lowest WER (ties: lower temperature,
/// then lower index). Loser: highest-WER candidate that passes the length
/// and repetition filters with WER >= tau_wer (ties: lower index). Returns
/// nothing when either side is missing.
std::optional<PreferenceTriplet> mine_preference_pair(std::span<const Candidate> candidates,
                                                      const JudgeConfig& judge);

std::vector<PreferenceTriplet> mine_preference_pairs(
    std::span<const std::vector<Candidate>> per_prompt, const JudgeConfig& judge);

struct TdscConfig {
  TemperatureSchedule schedule;
  JudgeConfig judge;
  double nucleus_p = 0.9;
  /// Passes over the accepted set per iteration.
  std::size_t sft_epochs = 1;
  /// Adam step size of the per-iteration fine-tune.
  double sft_learning_rate = 5e-3;
  bool disable_dpo = false;
  std::size_t iterations = 5;
  /// Decoding used for the before/after evaluation of each iteration.
  GenerationConfig evaluation = evaluation_generation();

  void validate() const;
};

/// Single temperature 1.0 and no DPO.
TdscConfig self_training_preset(TdscConfig base);

/// Generates and judges the candidates of round k for every prompt id.
/// Judge noise for candidate i uses the stream (seed, "tdsc.judge", p, k, i).
std::vector<std::vector<Candidate>> judge_round(const PolicyParams& params,
                                                const World& world,
                                                std::span<const std::uint32_t> prompt_ids,
                                                const TdscConfig& config, std::size_t k,
                                                std::uint64_t seed);

/// Metrics of a candidate pool. pass_rate is the accepted fraction; WER is
/// micro-averaged against each candidate's prompt.
MetricsRecord pool_metrics(const World& world,
                           std::span<const std::vector<Candidate>> per_prompt,
                           const JudgeConfig& judge);

struct TdscIterationLog {
  std::size_t k = 0;
  double t_high = 0.0;
  double pass_rate = 0.0;
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t pairs = 0;
  std::size_t prompts_without_pair = 0;
  bool aborted = false;
  std::uint64_t sft_steps = 0;
  std::vector<double> dpo_losses;
  /// Metrics of this round's candidate pool (before the update).
  MetricsRecord pool;
  /// Evaluation-protocol metrics around the update.
  MetricsRecord before;
  MetricsRecord after;
  /// Every mined pair, kept for auditing.
  std::vector<PreferenceTriplet> mined;
};

/// One refinement round on `prompt_ids`. The DPO reference is a snapshot of
/// `params` taken at entry. An empty accepted set leaves `params` unchanged
/// and marks the log aborted.
TdscIterationLog tdsc_iteration(PolicyParams& params, const World& world,
                                std::span<const std::uint32_t> prompt_ids,
                                const TdscConfig& config, const TrainConfig& train,
                                std::size_t k, std::uint64_t seed);

/// Generates, judges and mines round k without updating `params`.
/// before and after both hold the evaluation of `params`.
TdscIterationLog tdsc_probe(const PolicyParams& params, const World& world,
                            std::span<const std::uint32_t> prompt_ids,
                            const TdscConfig& config, std::size_t k, std::uint64_t seed);

struct TdscRun {
  std::vector<TdscIterationLog> iterations;
  /// Round k = iterations, judged on the final policy without an update.
  /// Closes the per-round series.
  TdscIterationLog probe;

  /// Candidate-pool series: entry j is round j (j = 0 .. iterations).
  std::vector<MetricsRecord> pool_series() const;
  /// iterations followed by probe.
  std::vector<TdscIterationLog> rounds() const;
};

/// Iterations k = 0 .. config.iterations - 1 over every prompt of `world`,
/// followed by one judging round at k = config.iterations.
TdscRun run_tdsc(PolicyParams& params, const World& world, const TdscConfig& config,
                 const TrainConfig& train, std::uint64_t seed);

}  // namespace erosion
