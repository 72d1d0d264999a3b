// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: the synthetic-ratio sweep, the alignment
// comparison and the self-critique comparison. Replicate r of a run uses
// the seed derive_seed(config.seed, "replicate", r); every stage below it
// derives its own stream from that seed, so results do not depend on the
// thread count or the order in which cells run.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "erosion/align.hpp"
#include "erosion/config.hpp"
#include "erosion/dgsa.hpp"
#include "erosion/diagnostics.hpp"
#include "erosion/tdsc.hpp"
#include "erosion/world.hpp"

namespace erosion {

inline constexpr const char* kVersion = "0.1.0";

struct CorpusCounts {
  std::size_t n_real = 0;
  std::size_t n_synthetic = 0;
};

/// n_synthetic = round(n_real * alpha / (1 - alpha)); alpha = 1 gives
/// (0, n_synthetic_pure). Throws DomainError outside [0,1].
CorpusCounts corpus_counts(double alpha, std::size_t n_real, std::size_t n_synthetic_pure);

std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate);

/// The world of one replicate: config.world seeded from the replicate seed.
World replicate_world(const ExperimentConfig& config, std::uint64_t rep_seed);

/// Seed of the evaluation streams shared by every system of a replicate.
std::uint64_t evaluation_seed(std::uint64_t rep_seed);

struct Stage1 {
  Corpus corpus;
  FrozenPolicy policy;
  SftReport sft;
};

/// Training corpus of one replicate at `alpha`.
Corpus stage1_corpus(const ExperimentConfig& config, const World& world, double alpha,
                     std::uint64_t rep_seed);

/// Builds the training corpus for `alpha` and fine-tunes a fresh policy on
/// it. Corpus and SFT streams are keyed by the replicate seed and alpha.
Stage1 train_stage1(const ExperimentConfig& config, const World& world, double alpha,
                    std::uint64_t rep_seed);

/// Best-of-N selection per prompt: N samples from (seed, "rs", prompt, i),
/// each judged with (seed, "rs.judge", prompt, i). Keeps the accepted
/// sample with the lowest WER; without one, the sample with the fewest
/// failed criteria, then the lowest WER. Ties keep the earlier sample.
std::vector<Utterance> rejection_sample(const World& world, const PolicyParams& params,
                                        const JudgeConfig& judge,
                                        const RejectionSamplingConfig& config,
                                        std::uint64_t seed);

struct SystemResult {
  std::string system;
  std::string stage1_hash;
  std::string params_hash;
  /// DPO objective weights; zero for systems without DPO.
  WeightPair weights{0.0, 0.0};
  MetricsRecord metrics;
};

struct MethodRun {
  SystemResult result;
  PolicyParams params;
  std::optional<DgsaLog> dgsa;
  std::optional<TdscRun> tdsc;
};

/// Runs one method from a Stage-1 checkpoint and evaluates it with the
/// replicate's evaluation seed.
MethodRun run_method(const ExperimentConfig& config, Method method, const World& world,
                     const Stage1& stage1, std::uint64_t rep_seed);

struct ScalingRow {
  double alpha = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  CorpusCounts counts;
  std::string params_hash;
  MetricsRecord metrics;
};

struct ScalingReport {
  std::vector<double> alpha_grid;
  std::size_t replicates = 0;
  /// Grid-major: row(a, r) = rows[a * replicates + r].
  std::vector<ScalingRow> rows;

  const ScalingRow& row(std::size_t alpha_index, std::size_t replicate) const;
  /// Metrics averaged over replicates, one entry per grid point.
  std::vector<MetricsRecord> mean_by_alpha() const;
  /// Grid point with the highest mean H_p (first on ties).
  double peak_alpha() const;
};

/// One SFT run and evaluation per (alpha, replicate) cell.
ScalingReport run_scaling_sweep(const ExperimentConfig& config);

struct ComparisonRow {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  SystemResult system;
};

/// One round of a self-critique run: candidate-pool metrics and counts.
struct RoundRow {
  std::string system;
  std::size_t replicate = 0;
  std::size_t k = 0;
  double t_high = 0.0;
  MetricsRecord pool;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t pairs = 0;
};

/// Independent re-check of one mined loser against the length and
/// repetition filters.
struct LoserAudit {
  std::string system;
  std::size_t replicate = 0;
  std::size_t k = 0;
  std::uint32_t prompt_id = 0;
  double length_ratio = 0.0;
  double repetition = 0.0;
  bool length_ok = false;
  bool repetition_ok = false;
};

struct ComparisonReport {
  /// "alignment" or "tdsc".
  std::string kind;
  double alpha = 0.0;
  std::size_t replicates = 0;
  std::vector<ComparisonRow> rows;
  std::vector<RoundRow> rounds;
  std::vector<LoserAudit> losers;

  /// Row of `system` in `replicate`; throws DomainError if absent.
  const SystemResult& find(std::size_t replicate, const std::string& system) const;
};

std::vector<RoundRow> round_rows(const std::string& system, std::size_t replicate,
                                 const TdscRun& run);
std::vector<LoserAudit> audit_losers(const World& world, const JudgeConfig& judge,
                                     const std::string& system, std::size_t replicate,
                                     const TdscRun& run);

/// SFT, Standard DPO, Rejection Sampling and DGSA at config.alpha, all from
/// one Stage-1 checkpoint per replicate.
ComparisonReport run_alignment_comparison(const ExperimentConfig& config);

/// SFT, Self-Training, Rejection Sampling and TDSC from a purely synthetic
/// Stage-1 checkpoint per replicate.
ComparisonReport run_tdsc_comparison(const ExperimentConfig& config);

}  // namespace erosion
