// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Optimisation substrate: MLE and DPO losses with exact gradients over the
// logit table, an adaptive-moment optimiser and frozen reference snapshots.
// Gradients are always accumulated in batch order, then step order.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "erosion/policy.hpp"
#include "erosion/world.hpp"

namespace erosion {

/// Same shape as PolicyParams::logits().
using GradientTable = std::vector<double>;

struct LossAndGrad {
  double loss = 0.0;
  GradientTable grad;
};

/// grad += scale * d log pi(tokens | prompt) / d logits.
void accumulate_logprob_grad(const PolicyParams& params, const Prompt& prompt,
                             std::span<const Token> tokens, bool terminated,
                             double scale, GradientTable& grad);

/// Mean negative log-likelihood (nats per sequence) over `batch`. `prompts`
/// is indexed by prompt id.
LossAndGrad mle_loss_and_grad(const PolicyParams& params,
                              std::span<const Prompt> prompts,
                              std::span<const Utterance> batch);

enum class ObjectiveTag { kStability, kExpressivity, kTdsc };

const char* to_string(ObjectiveTag tag) noexcept;

/// One side of a preference pair.
struct ScoredSequence {
  std::uint32_t prompt_id = 0;
  std::uint32_t speaker_tag = 0;
  TokenSequence tokens;
  bool terminated = true;
  TokenSequence style_prefix;
  Source source = Source::kGenerated;

  static ScoredSequence from(const Utterance& u, TokenSequence prefix = {});
};

struct PreferenceTriplet {
  std::uint32_t prompt_id = 0;
  ScoredSequence preferred;
  ScoredSequence dispreferred;
  ObjectiveTag tag = ObjectiveTag::kTdsc;
};

struct DpoConfig {
  double beta = 0.1;
};

/// Snapshot that never changes after construction.
class FrozenPolicy {
 public:
  explicit FrozenPolicy(PolicyParams params);

  const PolicyParams& params() const noexcept { return *params_; }
  /// SHA-256 of the serialised logit table, computed at freeze time.
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
  std::string hash_;
};

FrozenPolicy freeze_reference(const PolicyParams& params);

/// Hex SHA-256 of the vocabulary shape and logit bytes (little-endian).
std::string params_hash(const PolicyParams& params);

/// log pi_theta(y+)/pi_ref(y+) - log pi_theta(y-)/pi_ref(y-).
double dpo_margin(const PolicyParams& params, const PolicyParams& reference,
                  std::span<const Prompt> prompts, const PreferenceTriplet& t);

/// weight * mean_i -log sigmoid(beta * margin_i) and its gradient.
LossAndGrad dpo_loss_and_grad(const PolicyParams& params,
                              const PolicyParams& reference,
                              std::span<const Prompt> prompts,
                              std::span<const PreferenceTriplet> triplets,
                              double beta, double weight = 1.0);

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

OptimizerState make_optimizer(const PolicyParams& params, const AdamConfig& config);

/// One bias-corrected Adam step (decoupled weight decay). Throws DomainError
/// on shape mismatch.
void optimizer_step(OptimizerState& state, PolicyParams& params,
                    std::span<const double> gradient);

struct SftConfig {
  /// Optimiser step budget.
  std::size_t steps = 300;
  std::size_t batch_size = 16;
  AdamConfig adam{2e-2};
};

/// Steps needed to cover `epochs` passes over `n` items.
std::size_t steps_for_epochs(std::size_t n, std::size_t epochs,
                             std::size_t batch_size);

struct SftReport {
  std::vector<double> epoch_losses;
  std::uint64_t steps = 0;
};

/// Minibatch MLE with a fresh optimiser for exactly `config.steps` steps.
/// Batches are consecutive slices of a per-epoch permutation drawn from the
/// stream (seed, "sft.epoch", epoch); the last batch of an epoch may be short.
SftReport train_sft(PolicyParams& params, std::span<const Prompt> prompts,
                    std::span<const Utterance> data, const SftConfig& config,
                    std::uint64_t seed);

/// Full-batch preference optimisation: one optimiser step per epoch.
struct PreferenceConfig {
  double beta = 0.1;
  std::size_t epochs = 40;
  AdamConfig adam{1e-3};
};

struct TrainConfig {
  SftConfig sft;
  PreferenceConfig preference;
};

/// Runs `config.epochs` steps of a fresh optimiser on `objective(params,
/// epoch)`. Returns the per-epoch losses (evaluated before each step).
std::vector<double> train_preference(
    PolicyParams& params, const PreferenceConfig& config,
    const std::function<LossAndGrad(const PolicyParams&, std::size_t)>& objective);

}  // namespace erosion
