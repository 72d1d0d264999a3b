// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Measurement machinery: prosodic (pooled unigram) entropy, the
// mixture-entropy analysis, repetition rate and corpus-level metrics.
// Entropies are in bits.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "erosion/judge.hpp"
#include "erosion/policy.hpp"
#include "erosion/world.hpp"

namespace erosion {

struct TokenHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(std::span<const Token> tokens);
};

/// Shannon entropy (bits) of a categorical; zero entries contribute 0.
double entropy_bits(std::span<const double> dist);

double histogram_entropy_bits(const TokenHistogram& histogram);

/// Plug-in entropy of the pooled unigram histogram. EOS is never stored in a
/// sequence, so it never counts. Throws DomainError when there are no tokens.
double empirical_token_entropy(std::span<const TokenSequence> corpus);
double empirical_token_entropy(std::span<const Utterance> corpus);

struct MixtureSpec {
  std::vector<double> p_real;
  std::vector<double> p_syn;

  void validate() const;
  /// H(p_real) - H(p_syn).
  double entropy_gap() const;
};

std::vector<double> mixture_distribution(const MixtureSpec& spec, double alpha);
double mixture_entropy(const MixtureSpec& spec, double alpha);

/// dH/dalpha = sum_v (p_syn(v) - p_real(v)) * log2(1 / p_alpha(v)).
/// Throws DomainError when a term with nonzero coefficient has p_alpha(v) = 0.
double mixture_entropy_derivative(const MixtureSpec& spec, double alpha);

struct AlphaStar {
  double alpha = 0.0;
  bool interior = false;
};

AlphaStar find_alpha_star(const MixtureSpec& spec, double tolerance);

/// Fraction of length-(k+1) windows whose tokens are all equal; 0 if N <= k.
double repetition_rate(std::span<const Token> tokens, std::size_t k = 4);

struct MetricsRecord {
  double wer = 0.0;
  double h_p = 0.0;
  double repetition = 0.0;
  double pass_rate = 0.0;
  std::size_t sample_count = 0;
};

/// WER is micro-averaged (total edits over total reference length);
/// repetition is the per-utterance mean; pass rate uses the judge with
/// per-prompt noise streams derived from `seed`.
MetricsRecord corpus_metrics(const World& world,
                             std::span<const Utterance> generated,
                             const JudgeConfig& judge, std::uint64_t seed = 0);

/// Evaluation decoding: temperature 1, nucleus 0.9, one sample per prompt.
GenerationConfig evaluation_generation();

/// One sample per prompt of `world`, drawn from the streams
/// (seed, "eval", prompt id), scored by corpus_metrics with judge streams
/// derived from (seed, "eval.judge").
std::vector<Utterance> evaluation_corpus(const World& world,
                                         const PolicyParams& params,
                                         std::uint64_t seed,
                                         const GenerationConfig& gen = evaluation_generation());
MetricsRecord evaluate_policy(const World& world, const PolicyParams& params,
                              const JudgeConfig& judge, std::uint64_t seed,
                              const GenerationConfig& gen = evaluation_generation());

}  // namespace erosion
