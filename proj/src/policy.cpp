// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "erosion/errors.hpp"

namespace erosion {

PolicyParams::PolicyParams(const Vocab& vocab)
    : vocab_(vocab),
      logits_(static_cast<std::size_t>(vocab.base_count() + 1) *
                  (vocab.size() + 1) * (vocab.size() + 1),
              0.0) {}

std::size_t PolicyParams::row_offset(const ContextFeature& ctx) const {
  if (ctx.current_base >= base_features() ||
      ctx.previous_token >= previous_features()) {
    throw DomainError("context (" + std::to_string(ctx.current_base) + ", " +
                      std::to_string(ctx.previous_token) + ") out of range");
  }
  return (static_cast<std::size_t>(ctx.current_base) * previous_features() +
          ctx.previous_token) *
         outcomes();
}

PolicyParams init_policy(const Vocab& vocab) { return PolicyParams(vocab); }

ContextFeature context_at(const PolicyParams& params, const Prompt& prompt,
                          std::size_t step, std::uint32_t previous_token) {
  const std::uint32_t base =
      step < prompt.length() ? prompt.canonical[step] : params.pad();
  return {base, previous_token};
}

std::size_t generation_cap(const Prompt& prompt, double max_length_factor) {
  const auto cap = static_cast<std::size_t>(
      std::ceil(max_length_factor * static_cast<double>(prompt.length())));
  return std::max<std::size_t>(cap, 1);
}

Distribution softmax(std::span<const double> logits) {
  Distribution out(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

Distribution step_distribution(const PolicyParams& params,
                               const ContextFeature& ctx) {
  return softmax(params.row(ctx));
}

Distribution apply_temperature(std::span<const double> dist, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("temperature must be a positive finite number");
  }
  if (temperature == 1.0) return Distribution(dist.begin(), dist.end());
  Distribution scaled(dist.size());
  double mx = -INFINITY;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    scaled[i] = dist[i] > 0.0 ? std::log(dist[i]) / temperature : -INFINITY;
    mx = std::max(mx, scaled[i]);
  }
  double total = 0.0;
  for (auto& s : scaled) {
    s = std::isinf(s) ? 0.0 : std::exp(s - mx);
    total += s;
  }
  for (auto& s : scaled) s /= total;
  return scaled;
}

Distribution nucleus_filter(std::span<const double> dist, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("nucleus p must be in (0,1]");
  if (p >= 1.0) return Distribution(dist.begin(), dist.end());
  std::vector<std::uint32_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return dist[a] > dist[b];
  });
  Distribution out(dist.size(), 0.0);
  double kept = 0.0;
  for (std::uint32_t idx : order) {
    out[idx] = dist[idx];
    kept += dist[idx];
    if (kept >= p) break;
  }
  for (auto& q : out) q /= kept;
  return out;
}

std::uint32_t sample_categorical(std::span<const double> dist, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::uint32_t last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    cum += dist[i];
    last_positive = static_cast<std::uint32_t>(i);
    if (u < cum) return last_positive;
  }
  return last_positive;
}

namespace {

std::uint32_t argmax(std::span<const double> xs) {
  return static_cast<std::uint32_t>(
      std::max_element(xs.begin(), xs.end()) - xs.begin());
}

}  // namespace

Utterance sample_sequence(const PolicyParams& params, const Prompt& prompt,
                          const GenerationConfig& config, Rng& rng) {
  const Vocab& vocab = params.vocab();
  for (Token t : config.style_prefix) {
    if (t >= vocab.size()) throw DomainError("style prefix token out of range");
  }
  const std::size_t cap = generation_cap(prompt, config.max_length_factor);

  Utterance out;
  out.prompt_id = prompt.id;
  out.source = Source::kGenerated;
  out.speaker_tag = prompt.speaker_tag;
  out.terminated = false;
  if (!config.greedy) out.temperature_used = config.temperature;

  std::uint32_t prev = params.bos();
  for (std::size_t step = 0; step < cap; ++step) {
    Token next;
    if (step < config.style_prefix.size()) {
      next = config.style_prefix[step];
    } else {
      const auto ctx = context_at(params, prompt, step, prev);
      if (config.greedy) {
        next = argmax(params.row(ctx));
      } else {
        Distribution d = step_distribution(params, ctx);
        if (config.temperature != 1.0) d = apply_temperature(d, config.temperature);
        if (config.nucleus_p < 1.0) d = nucleus_filter(d, config.nucleus_p);
        next = sample_categorical(d, rng);
      }
    }
    if (next == vocab.eos()) {
      out.terminated = true;
      break;
    }
    out.tokens.push_back(next);
    prev = next;
  }
  return out;
}

double sequence_logprob(const PolicyParams& params, const Prompt& prompt,
                        std::span<const Token> tokens, bool terminated,
                        std::span<const Token> style_prefix) {
  if (style_prefix.size() > tokens.size() ||
      !std::equal(style_prefix.begin(), style_prefix.end(), tokens.begin())) {
    throw DomainError("sequence does not begin with its style prefix");
  }
  const Token eos = params.vocab().eos();
  double total = 0.0;
  std::uint32_t prev = params.bos();
  auto score = [&](std::size_t step, Token target) {
    const auto row = params.row(context_at(params, prompt, step, prev));
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double l : row) z += std::exp(l - mx);
    total += row[target] - mx - std::log(z);
  };
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= eos) throw DomainError("token out of range in sequence");
    score(t, tokens[t]);
    prev = tokens[t];
  }
  if (terminated) score(tokens.size(), eos);
  return total;
}

}  // namespace erosion
