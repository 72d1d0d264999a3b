// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/dgsa.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "erosion/errors.hpp"
#include "erosion/parallel.hpp"

namespace erosion {

void WeightPair::validate() const {
  if (!(lambda_s >= 0.0 && lambda_s <= 1.0 && lambda_e >= 0.0 && lambda_e <= 1.0)) {
    throw DomainError("DGSA weights must lie in [0,1]");
  }
  if (std::abs(lambda_s + lambda_e - 1.0) > 1e-12) {
    throw DomainError("DGSA weights must sum to 1");
  }
}

void DgsaConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("dgsa.alpha", "must be in [0,1]");
  if (!(alpha_star >= 0.0 && alpha_star < 1.0)) {
    throw ConfigError("dgsa.alpha_star", "must be in [0,1)");
  }
  if (style_prefix_length < 1) {
    throw ConfigError("dgsa.style_prefix_length", "must be >= 1");
  }
  if (pairs_per_prompt < 1) throw ConfigError("dgsa.pairs_per_prompt", "must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("dgsa.temperature", "must be > 0");
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) {
    throw ConfigError("dgsa.nucleus_p", "must be in (0,1]");
  }
  if (forced_weights) forced_weights->validate();
}

WeightPair dynamic_weights(double alpha, double alpha_star) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must be in [0,1]");
  if (alpha_star == 1.0) throw DomainError("degenerate weight schedule: alpha* = 1");
  if (!(alpha_star >= 0.0 && alpha_star < 1.0)) {
    throw DomainError("alpha* must be in [0,1)");
  }
  const double lambda_e = std::max(0.0, (alpha - alpha_star) / (1.0 - alpha_star));
  return {1.0 - lambda_e, lambda_e};
}

WeightPair effective_weights(const DgsaConfig& config) {
  if (config.forced_weights) return *config.forced_weights;
  WeightPair w = config.fixed_weights ? WeightPair{0.5, 0.5}
                                      : dynamic_weights(config.alpha, config.alpha_star);
  if (config.disable_expressivity && config.disable_stability) return {0.0, 0.0};
  if (config.disable_expressivity) return {1.0, 0.0};
  if (config.disable_stability) return {0.0, 1.0};
  return w;
}

StylePrefix extract_style_prefix(const Utterance& real, std::size_t s) {
  StylePrefix p;
  const std::size_t n = std::min(s, real.tokens.size());
  p.tokens.assign(real.tokens.begin(), real.tokens.begin() + static_cast<std::ptrdiff_t>(n));
  p.speaker_tag = real.speaker_tag;
  return p;
}

DualOutput generate_dual(const PolicyParams& frozen, const Prompt& prompt,
                         const Utterance& real, std::size_t real_index,
                         const DgsaConfig& config, Rng& rng) {
  if (real.tokens.empty()) throw DomainError("style reference has no tokens");
  if (real.prompt_id != prompt.id) {
    throw PreconditionError("style reference belongs to prompt " +
                            std::to_string(real.prompt_id) + ", not " +
                            std::to_string(prompt.id));
  }
  if (real.source != Source::kReal) {
    throw PreconditionError("style reference must be real speech");
  }
  DualOutput d;
  d.prompt_id = prompt.id;
  d.real_index = real_index;
  d.prefix = extract_style_prefix(real, config.style_prefix_length);

  GenerationConfig gen;
  gen.temperature = config.temperature;
  gen.nucleus_p = config.nucleus_p;
  gen.style_prefix = d.prefix.tokens;
  d.expressive = sample_sequence(frozen, prompt, gen, rng);
  gen.style_prefix.clear();
  d.stable = sample_sequence(frozen, prompt, gen, rng);
  d.expressive.speaker_tag = real.speaker_tag;
  d.stable.speaker_tag = real.speaker_tag;
  return d;
}

PreferenceSets build_preference_sets(std::span<const DualOutput> duals,
                                     std::span<const Utterance> reals,
                                     bool random_pairing) {
  PreferenceSets sets;
  const std::size_t n = duals.size();
  for (std::size_t i = 0; i < n; ++i) {
    const DualOutput& anchor = duals[i];
    if (anchor.real_index >= reals.size() ||
        reals[anchor.real_index].prompt_id != anchor.prompt_id ||
        reals[anchor.real_index].source != Source::kReal) {
      ++sets.skipped;
      continue;
    }
    const Utterance& real = reals[anchor.real_index];
    const DualOutput& negatives = random_pairing ? duals[(i + 1) % n] : anchor;
    const bool matched = negatives.prompt_id == anchor.prompt_id;
    const ScoredSequence preferred =
        ScoredSequence::from(real, matched ? anchor.prefix.tokens : TokenSequence{});

    PreferenceTriplet stab;
    stab.prompt_id = anchor.prompt_id;
    stab.preferred = preferred;
    stab.dispreferred = ScoredSequence::from(negatives.expressive, negatives.prefix.tokens);
    stab.tag = ObjectiveTag::kStability;
    sets.stability.push_back(std::move(stab));

    PreferenceTriplet expr;
    expr.prompt_id = anchor.prompt_id;
    expr.preferred = preferred;
    expr.dispreferred = ScoredSequence::from(negatives.stable);
    expr.tag = ObjectiveTag::kExpressivity;
    sets.expressivity.push_back(std::move(expr));
  }
  return sets;
}

LossAndGrad dgsa_combined_loss(const PolicyParams& params,
                               const PolicyParams& reference,
                               std::span<const Prompt> prompts,
                               std::span<const PreferenceTriplet> stability,
                               std::span<const PreferenceTriplet> expressivity,
                               const WeightPair& weights, double beta) {
  weights.validate();
  const bool use_s = weights.lambda_s != 0.0;
  const bool use_e = weights.lambda_e != 0.0;
  if (!use_s && !use_e) throw PreconditionError("DGSA has no active objective");
  if (use_s && stability.empty()) {
    throw PreconditionError("stability preference set is empty");
  }
  if (use_e && expressivity.empty()) {
    throw PreconditionError("expressivity preference set is empty");
  }
  LossAndGrad out;
  out.grad.assign(params.parameter_count(), 0.0);
  auto add = [&](std::span<const PreferenceTriplet> set, double w) {
    LossAndGrad term = dpo_loss_and_grad(params, reference, prompts, set, beta, w);
    out.loss += term.loss;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += term.grad[i];
  };
  if (use_s) add(stability, weights.lambda_s);
  if (use_e) add(expressivity, weights.lambda_e);
  return out;
}

DgsaResult align_dgsa(const World& world, const FrozenPolicy& stage1,
                      std::span<const Utterance> reals, const DgsaConfig& config,
                      const PreferenceConfig& preference, std::uint64_t seed) {
  config.validate();
  const WeightPair weights = effective_weights(config);
  if (weights.lambda_s == 0.0 && weights.lambda_e == 0.0) {
    throw PreconditionError("DGSA has no active objective");
  }
  std::map<std::uint32_t, std::vector<std::size_t>> by_prompt;
  for (std::size_t i = 0; i < reals.size(); ++i) {
    if (reals[i].source == Source::kReal && !reals[i].tokens.empty()) {
      by_prompt[reals[i].prompt_id].push_back(i);
    }
  }
  if (by_prompt.empty()) {
    throw PreconditionError(
        "DGSA needs real utterances for style references; use TDSC for a "
        "purely synthetic start");
  }
  std::vector<std::uint32_t> covered;
  for (const auto& [pid, idx] : by_prompt) covered.push_back(pid);

  const std::size_t per = config.pairs_per_prompt;
  const PolicyParams& frozen = stage1.params();
  DgsaResult result{frozen, {}};
  result.log.stage1_hash = stage1.hash();
  result.log.weights = weights;

  auto objective = [&](const PolicyParams& params, std::size_t epoch) {
    std::vector<DualOutput> duals(covered.size() * per);
    parallel_for(duals.size(), [&](std::size_t slot) {
      const std::uint32_t pid = covered[slot / per];
      const std::size_t draw = epoch * per + slot % per;
      const auto& candidates = by_prompt.at(pid);
      const std::size_t ri = candidates[draw % candidates.size()];
      Rng rng = Rng::stream(seed, "dgsa.dual", pid, draw);
      duals[slot] = generate_dual(frozen, world.prompt(pid), reals[ri], ri, config, rng);
    });
    PreferenceSets sets = build_preference_sets(duals, reals, config.random_pairing);
    if (epoch == 0) {
      result.log.stability_pairs = sets.stability.size();
      result.log.expressivity_pairs = sets.expressivity.size();
      result.log.skipped = sets.skipped;
    }
    return dgsa_combined_loss(params, frozen, world.prompts(), sets.stability,
                              sets.expressivity, weights, preference.beta);
  };
  result.log.dpo_losses = train_preference(result.params, preference, objective);
  result.log.reference_hash_after = params_hash(frozen);
  result.log.final_hash = params_hash(result.params);
  return result;
}

DgsaResult run_dgsa(const World& world, const Corpus& corpus,
                    const DgsaConfig& config, const TrainConfig& train,
                    std::uint64_t seed) {
  config.validate();
  std::vector<Utterance> reals;
  for (const auto& u : corpus.items()) {
    if (u.source == Source::kReal) reals.push_back(u);
  }
  if (reals.empty()) {
    throw PreconditionError(
        "DGSA needs real utterances for style references; use TDSC for a "
        "purely synthetic start");
  }
  PolicyParams params = init_policy(world.vocab());
  SftReport sft = train_sft(params, world.prompts(), corpus.items(), train.sft,
                            derive_seed(seed, "dgsa.sft"));
  const FrozenPolicy stage1 = freeze_reference(params);
  DgsaResult result = align_dgsa(world, stage1, reals, config, train.preference, seed);
  result.log.sft_epoch_losses = std::move(sft.epoch_losses);
  return result;
}

}  // namespace erosion
