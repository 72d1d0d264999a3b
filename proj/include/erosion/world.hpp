// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// The synthetic token-speech world. Every token factors into a base symbol
// (content, what the decode oracle reads back) and a variant (prosody, which
// the decode oracle discards). Real utterances draw variants from
// per-(prompt, position) Dirichlet distributions; synthetic utterances almost
// always use variant 0.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "erosion/rng.hpp"

namespace erosion {

using Token = std::uint32_t;
using TokenSequence = std::vector<Token>;
using BaseSequence = std::vector<std::uint32_t>;

struct WorldConfig {
  std::uint32_t base_symbol_count = 16;  // P
  std::uint32_t variant_count = 4;       // S
  std::uint32_t prompt_count = 200;      // M
  std::uint32_t min_length = 12;
  std::uint32_t max_length = 32;
  double real_prompt_coverage = 0.4;
  double variant_concentration = 0.8;
  /// Relative Dirichlet weight of variant 0 (the "neutral" rendering the
  /// synthetic generator uses) in real variant distributions. 1 is symmetric.
  double neutral_variant_weight = 0.15;
  /// Probability that a canonical symbol repeats the previous one, which
  /// gives canonical sequences runs of identical bases.
  double base_repeat_prob = 0.6;
  double synthetic_variant_noise = 0.005;  // eps_syn
  double real_base_noise = 0.0;            // eps_real
  std::uint32_t speaker_count = 8;
  std::uint64_t master_seed = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const WorldConfig&) const = default;
};

/// Token <-> (base, variant) mapping. token = base * S + variant; EOS = P * S.
class Vocab {
 public:
  Vocab(std::uint32_t base_count, std::uint32_t variant_count)
      : base_count_(base_count), variant_count_(variant_count) {}

  std::uint32_t base_count() const noexcept { return base_count_; }
  std::uint32_t variant_count() const noexcept { return variant_count_; }
  std::uint32_t size() const noexcept { return base_count_ * variant_count_; }
  Token eos() const noexcept { return size(); }

  std::uint32_t base_of(Token t) const noexcept { return t / variant_count_; }
  std::uint32_t variant_of(Token t) const noexcept { return t % variant_count_; }
  Token token(std::uint32_t base, std::uint32_t variant) const noexcept {
    return base * variant_count_ + variant;
  }

  bool operator==(const Vocab&) const = default;

 private:
  std::uint32_t base_count_;
  std::uint32_t variant_count_;
};

struct Prompt {
  std::uint32_t id = 0;
  BaseSequence canonical;
  std::uint32_t speaker_tag = 0;
  bool in_real_coverage = false;

  std::size_t length() const noexcept { return canonical.size(); }
  bool operator==(const Prompt&) const = default;
};

enum class Source { kReal, kSynthetic, kGenerated };

const char* to_string(Source s) noexcept;

struct Utterance {
  std::uint32_t prompt_id = 0;
  TokenSequence tokens;
  /// True when the sequence ended with EOS (EOS itself is never stored).
  bool terminated = true;
  Source source = Source::kGenerated;
  std::uint32_t speaker_tag = 0;
  std::optional<double> temperature_used;

  bool operator==(const Utterance&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Utterance> items);

  const std::vector<Utterance>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t synthetic_count() const noexcept { return synthetic_count_; }
  std::size_t real_count() const noexcept;

  /// |synthetic| / |items|; 0 for an empty corpus.
  double alpha() const noexcept { return alpha_; }

  void append(const Corpus& other);

 private:
  void recount();

  std::vector<Utterance> items_;
  std::size_t synthetic_count_ = 0;
  double alpha_ = 0.0;
};

/// Immutable after construction.
class World {
 public:
  World(WorldConfig config, std::vector<Prompt> prompts,
        std::vector<std::vector<double>> variant_distributions);

  const WorldConfig& config() const noexcept { return config_; }
  const Vocab& vocab() const noexcept { return vocab_; }
  std::span<const Prompt> prompts() const noexcept { return prompts_; }
  const Prompt& prompt(std::uint32_t id) const;
  std::vector<std::uint32_t> covered_prompt_ids() const;

  /// Real variant distribution at (prompt, position), length S.
  std::span<const double> variant_distribution(std::uint32_t prompt_id,
                                               std::size_t position) const;

  bool operator==(const World&) const = default;

 private:
  WorldConfig config_;
  Vocab vocab_;
  std::vector<Prompt> prompts_;
  // Per prompt: length * S probabilities, row-major by position.
  std::vector<std::vector<double>> variant_distributions_;
};

World build_world(const WorldConfig& config);

Utterance sample_real_utterance(const World& world, const Prompt& prompt,
                                Rng& rng);
Utterance sample_synthetic_utterance(const World& world, const Prompt& prompt,
                                     Rng& rng);

/// Real items come only from covered prompts; items are shuffled.
Corpus build_mixed_corpus(const World& world, std::size_t n_real,
                          std::size_t n_synthetic, std::uint64_t seed);

/// Base symbol per token. Throws DomainError for tokens >= |V|.
BaseSequence decode_tokens(const Vocab& vocab, std::span<const Token> tokens);

/// Unit-cost Levenshtein distance.
std::size_t edit_distance(std::span<const std::uint32_t> a,
                          std::span<const std::uint32_t> b);

/// Edit distance over |reference|. Throws DomainError on empty reference.
double wer_proxy(std::span<const std::uint32_t> reference,
                 std::span<const std::uint32_t> hypothesis);

/// Replace each symbol by a uniformly chosen different base w.p. noise_rate.
BaseSequence corrupt_hypothesis(std::span<const std::uint32_t> hypothesis,
                                double noise_rate, std::uint32_t base_count,
                                Rng& rng);

inline constexpr int kWorldFormatVersion = 1;

nlohmann::json world_to_json(const World& world);
World world_from_json(const nlohmann::json& doc);

}  // namespace erosion
