// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Disentanglement-guided self-alignment. A frozen SFT checkpoint produces
// two outputs per real reference: an expressive one that continues the
// reference's first s tokens, and a stable one with no prefix. Real speech
// is preferred over each in two DPO objectives whose weights follow the
// synthetic ratio of the SFT corpus.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "erosion/align.hpp"
#include "erosion/policy.hpp"
#include "erosion/world.hpp"

namespace erosion {

struct WeightPair {
  double lambda_s = 1.0;
  double lambda_e = 0.0;

  void validate() const;
};

struct DgsaConfig {
  /// Synthetic ratio of the Stage-1 corpus.
  double alpha = 0.8;
  double alpha_star = 0.5;
  std::size_t style_prefix_length = 4;
  /// Dual pairs per covered prompt per epoch.
  std::size_t pairs_per_prompt = 1;
  double temperature = 1.0;
  double nucleus_p = 0.9;

  bool disable_expressivity = false;
  bool disable_stability = false;
  bool random_pairing = false;
  /// lambda_s = lambda_e = 0.5 regardless of alpha.
  bool fixed_weights = false;
  /// Overrides every other weight rule (Standard DPO uses (0, 1)).
  std::optional<WeightPair> forced_weights;

  void validate() const;
};

/// lambda_e = max(0, (alpha - alpha*) / (1 - alpha*)), lambda_s = 1 - lambda_e.
/// Throws DomainError when alpha_star == 1 or either ratio is outside [0,1].
WeightPair dynamic_weights(double alpha, double alpha_star);

/// Weights after applying forced/fixed weights and the objective ablations.
WeightPair effective_weights(const DgsaConfig& config);

struct StylePrefix {
  TokenSequence tokens;
  std::uint32_t speaker_tag = 0;
};

/// First min(s, |y|) tokens of a real utterance.
StylePrefix extract_style_prefix(const Utterance& real, std::size_t s);

struct DualOutput {
  std::uint32_t prompt_id = 0;
  /// Index of the real reference in the reference list.
  std::size_t real_index = 0;
  StylePrefix prefix;
  Utterance expressive;
  Utterance stable;
};

/// Samples the prefixed and prefix-free outputs from the same checkpoint.
/// Both carry the reference's speaker tag. Throws DomainError for an empty
/// reference and PreconditionError when the reference belongs to another
/// prompt or is not real.
DualOutput generate_dual(const PolicyParams& frozen, const Prompt& prompt,
                         const Utterance& real, std::size_t real_index,
                         const DgsaConfig& config, Rng& rng);

struct PreferenceSets {
  std::vector<PreferenceTriplet> stability;
  std::vector<PreferenceTriplet> expressivity;
  /// Duals dropped because their real reference was missing.
  std::size_t skipped = 0;
};

/// Stability: (real, expressive). Expressivity: (real, stable). With
/// `random_pairing`, dual outputs are rotated by one so each real is paired
/// with another prompt's outputs.
PreferenceSets build_preference_sets(std::span<const DualOutput> duals,
                                     std::span<const Utterance> reals,
                                     bool random_pairing = false);

/// lambda_s * DPO(stability) + lambda_e * DPO(expressivity). A zero weight
/// skips its term. Throws PreconditionError if a weighted set is empty or
/// both terms are skipped.
LossAndGrad dgsa_combined_loss(const PolicyParams& params,
                               const PolicyParams& reference,
                               std::span<const Prompt> prompts,
                               std::span<const PreferenceTriplet> stability,
                               std::span<const PreferenceTriplet> expressivity,
                               const WeightPair& weights, double beta);

struct DgsaLog {
  std::string stage1_hash;
  std::vector<double> sft_epoch_losses;
  WeightPair weights;
  std::size_t stability_pairs = 0;
  std::size_t expressivity_pairs = 0;
  std::size_t skipped = 0;
  std::vector<double> dpo_losses;
  std::string reference_hash_after;
  std::string final_hash;
};

struct DgsaResult {
  PolicyParams params;
  DgsaLog log;
};

/// Stages 2 and 3 from an existing Stage-1 checkpoint. `reals` are the real
/// utterances of the Stage-1 corpus; epoch e draws dual outputs from the
/// streams (seed, "dgsa.dual", prompt, e * pairs_per_prompt + j).
DgsaResult align_dgsa(const World& world, const FrozenPolicy& stage1,
                      std::span<const Utterance> reals, const DgsaConfig& config,
                      const PreferenceConfig& preference, std::uint64_t seed);

/// Stage 1 (SFT on the corpus) followed by align_dgsa. Throws
/// PreconditionError when the corpus holds no real utterances.
DgsaResult run_dgsa(const World& world, const Corpus& corpus,
                    const DgsaConfig& config, const TrainConfig& train,
                    std::uint64_t seed);

}  // namespace erosion
