// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/diagnostics.hpp"

#include <cmath>
#include <string>

#include "erosion/errors.hpp"
#include "erosion/parallel.hpp"

namespace erosion {

void TokenHistogram::add(std::span<const Token> tokens) {
  for (Token t : tokens) {
    if (t >= counts.size()) counts.resize(static_cast<std::size_t>(t) + 1, 0);
    ++counts[t];
    ++total;
  }
}

double entropy_bits(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double histogram_entropy_bits(const TokenHistogram& histogram) {
  if (histogram.total == 0) throw DomainError("entropy of an empty histogram");
  const double n = static_cast<double>(histogram.total);
  double h = 0.0;
  for (auto c : histogram.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double empirical_token_entropy(std::span<const TokenSequence> corpus) {
  TokenHistogram hist;
  for (const auto& seq : corpus) hist.add(seq);
  return histogram_entropy_bits(hist);
}

double empirical_token_entropy(std::span<const Utterance> corpus) {
  TokenHistogram hist;
  for (const auto& u : corpus) hist.add(u.tokens);
  return histogram_entropy_bits(hist);
}

namespace {

void validate_categorical(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw DomainError(std::string(name) + " has a negative or non-finite entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError(std::string(name) + " does not sum to 1");
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must be in [0,1]");
}

// Sign-only derivative that tolerates endpoint singularities (+/-inf).
double derivative_or_infinite(const MixtureSpec& spec, double alpha) {
  double d = 0.0;
  for (std::size_t v = 0; v < spec.p_real.size(); ++v) {
    const double coef = spec.p_syn[v] - spec.p_real[v];
    if (coef == 0.0) continue;
    const double pa = (1.0 - alpha) * spec.p_real[v] + alpha * spec.p_syn[v];
    if (pa <= 0.0) return coef > 0.0 ? INFINITY : -INFINITY;
    d -= coef * std::log2(pa);
  }
  return d;
}

}  // namespace

void MixtureSpec::validate() const {
  if (p_real.empty() || p_real.size() != p_syn.size()) {
    throw DomainError("mixture components must share a nonempty support");
  }
  validate_categorical(p_real, "p_real");
  validate_categorical(p_syn, "p_syn");
}

double MixtureSpec::entropy_gap() const {
  return entropy_bits(p_real) - entropy_bits(p_syn);
}

std::vector<double> mixture_distribution(const MixtureSpec& spec, double alpha) {
  check_alpha(alpha);
  spec.validate();
  std::vector<double> out(spec.p_real.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] = (1.0 - alpha) * spec.p_real[v] + alpha * spec.p_syn[v];
  }
  return out;
}

double mixture_entropy(const MixtureSpec& spec, double alpha) {
  return entropy_bits(mixture_distribution(spec, alpha));
}

double mixture_entropy_derivative(const MixtureSpec& spec, double alpha) {
  check_alpha(alpha);
  spec.validate();
  const double d = derivative_or_infinite(spec, alpha);
  if (std::isinf(d)) {
    throw DomainError("entropy derivative is singular: p_alpha(v) = 0 on the "
                      "support of a component");
  }
  return d;
}

AlphaStar find_alpha_star(const MixtureSpec& spec, double tolerance) {
  if (!(tolerance > 0.0)) throw DomainError("tolerance must be > 0");
  spec.validate();
  // H is concave, so H' is nonincreasing: the sign at the ends decides.
  if (derivative_or_infinite(spec, 0.0) <= 0.0) return {0.0, false};
  if (derivative_or_infinite(spec, 1.0) >= 0.0) return {1.0, false};
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (derivative_or_infinite(spec, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), true};
}

double repetition_rate(std::span<const Token> tokens, std::size_t k) {
  if (k == 0) throw DomainError("repetition window k must be >= 1");
  const std::size_t n = tokens.size();
  if (n <= k) return 0.0;
  // run = length of the run of equal tokens ending at i.
  std::size_t hits = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    run = tokens[i] == tokens[i - 1] ? run + 1 : 1;
    if (run >= k + 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n - k);
}

MetricsRecord corpus_metrics(const World& world,
                             std::span<const Utterance> generated,
                             const JudgeConfig& judge, std::uint64_t seed) {
  if (generated.empty()) throw DomainError("metrics of an empty corpus");
  MetricsRecord m;
  m.sample_count = generated.size();
  std::size_t edits = 0, ref_len = 0, accepted = 0;
  double rep_sum = 0.0;
  TokenHistogram hist;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const Utterance& u = generated[i];
    const Prompt& prompt = world.prompt(u.prompt_id);
    edits += edit_distance(prompt.canonical, decode_tokens(world.vocab(), u.tokens));
    ref_len += prompt.length();
    rep_sum += repetition_rate(u.tokens, judge.repetition_window);
    hist.add(u.tokens);
    Rng rng = Rng::stream(seed, "metrics.judge", u.prompt_id, i);
    if (judge_candidate(world, prompt, u.tokens, judge, rng).accepted) ++accepted;
  }
  const double n = static_cast<double>(generated.size());
  m.wer = static_cast<double>(edits) / static_cast<double>(ref_len);
  m.h_p = hist.total > 0 ? histogram_entropy_bits(hist) : 0.0;
  m.repetition = rep_sum / n;
  m.pass_rate = static_cast<double>(accepted) / n;
  return m;
}

GenerationConfig evaluation_generation() {
  GenerationConfig g;
  g.temperature = 1.0;
  g.nucleus_p = 0.9;
  return g;
}

std::vector<Utterance> evaluation_corpus(const World& world,
                                         const PolicyParams& params,
                                         std::uint64_t seed,
                                         const GenerationConfig& gen) {
  const auto prompts = world.prompts();
  std::vector<Utterance> out(prompts.size());
  parallel_for(prompts.size(), [&](std::size_t i) {
    Rng rng = Rng::stream(seed, "eval", prompts[i].id);
    out[i] = sample_sequence(params, prompts[i], gen, rng);
  });
  return out;
}

MetricsRecord evaluate_policy(const World& world, const PolicyParams& params,
                              const JudgeConfig& judge, std::uint64_t seed,
                              const GenerationConfig& gen) {
  const auto corpus = evaluation_corpus(world, params, seed, gen);
  return corpus_metrics(world, corpus, judge, derive_seed(seed, "eval.judge"));
}

}  // namespace erosion
