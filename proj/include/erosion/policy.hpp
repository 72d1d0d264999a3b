// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conditional autoregressive categorical policy over tokens + EOS.
//
// The logit table is indexed by (current aligned base, previous token) and
// holds one logit per outcome (|V| tokens followed by EOS). Alignment is a
// forced monotone pointer: at emission step t the current base is
// canonical[t] while t < |x|, and PAD afterwards.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "erosion/rng.hpp"
#include "erosion/world.hpp"

namespace erosion {

using Distribution = std::vector<double>;

struct ContextFeature {
  std::uint32_t current_base = 0;    // base symbol, or PAD == P
  std::uint32_t previous_token = 0;  // token id, or BOS == |V|

  bool operator==(const ContextFeature&) const = default;
};

class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(const Vocab& vocab);

  const Vocab& vocab() const noexcept { return vocab_; }

  std::uint32_t pad() const noexcept { return vocab_.base_count(); }
  std::uint32_t bos() const noexcept { return vocab_.size(); }

  std::size_t base_features() const noexcept { return vocab_.base_count() + 1; }
  std::size_t previous_features() const noexcept { return vocab_.size() + 1; }
  std::size_t outcomes() const noexcept { return vocab_.size() + 1; }
  std::size_t parameter_count() const noexcept { return logits_.size(); }

  /// Offset of the first logit of the row for `ctx`. Throws DomainError.
  std::size_t row_offset(const ContextFeature& ctx) const;

  std::span<const double> row(const ContextFeature& ctx) const {
    return std::span<const double>(logits_).subspan(row_offset(ctx), outcomes());
  }
  std::span<double> row(const ContextFeature& ctx) {
    return std::span<double>(logits_).subspan(row_offset(ctx), outcomes());
  }

  std::span<const double> logits() const noexcept { return logits_; }
  std::span<double> logits() noexcept { return logits_; }

  bool operator==(const PolicyParams&) const = default;

 private:
  Vocab vocab_{2, 2};
  std::vector<double> logits_;
};

struct GenerationConfig {
  double temperature = 1.0;
  double nucleus_p = 1.0;
  double max_length_factor = 2.5;
  /// Argmax decoding (the T -> 0 limit). Temperature and nucleus are ignored.
  bool greedy = false;
  /// Forced (teacher-forced) leading tokens, e.g. a style prefix.
  TokenSequence style_prefix;
};

/// Zero logits: every conditional distribution is uniform.
PolicyParams init_policy(const Vocab& vocab);

/// Context at emission step `step` given the previously emitted token
/// (or BOS at step 0).
ContextFeature context_at(const PolicyParams& params, const Prompt& prompt,
                          std::size_t step, std::uint32_t previous_token);

std::size_t generation_cap(const Prompt& prompt, double max_length_factor);

Distribution softmax(std::span<const double> logits);

Distribution step_distribution(const PolicyParams& params,
                               const ContextFeature& ctx);

/// Output proportional to p^(1/T). Throws DomainError for T <= 0.
Distribution apply_temperature(std::span<const double> dist, double temperature);

/// Keep the smallest highest-probability prefix whose mass reaches p
/// (ties: smaller outcome id first), zero the rest, renormalise.
Distribution nucleus_filter(std::span<const double> dist, double p);

/// Inverse-CDF draw.
std::uint32_t sample_categorical(std::span<const double> dist, Rng& rng);

/// Returns an utterance tagged Source::kGenerated. EOS is never stored.
Utterance sample_sequence(const PolicyParams& params, const Prompt& prompt,
                          const GenerationConfig& config, Rng& rng);

/// log pi(y | x) in nats at T = 1 without nucleus filtering. Forced prefix
/// tokens are part of `tokens` and are scored like any other token. When
/// `style_prefix` is non-empty, `tokens` must begin with it.
double sequence_logprob(const PolicyParams& params, const Prompt& prompt,
                        std::span<const Token> tokens, bool terminated,
                        std::span<const Token> style_prefix = {});

}  // namespace erosion
