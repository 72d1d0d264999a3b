// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "erosion/errors.hpp"

namespace erosion {

namespace {

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw ConfigError(std::string("world.") + field, message);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::uint32_t sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<std::uint32_t>(i);
  }
  return static_cast<std::uint32_t>(probs.size() - 1);
}

}  // namespace

void WorldConfig::validate() const {
  require(base_symbol_count >= 2, "base_symbol_count", "must be >= 2");
  require(variant_count >= 2, "variant_count", "must be >= 2");
  require(prompt_count >= 1, "prompt_count", "must be >= 1");
  require(min_length >= 1, "min_length", "must be >= 1");
  require(min_length <= max_length, "max_length", "must be >= min_length");
  require(is_probability(real_prompt_coverage), "real_prompt_coverage",
          "must be in [0,1]");
  require(variant_concentration > 0.0 && std::isfinite(variant_concentration),
          "variant_concentration", "must be > 0");
  require(neutral_variant_weight > 0.0 && std::isfinite(neutral_variant_weight),
          "neutral_variant_weight", "must be > 0");
  require(is_probability(base_repeat_prob), "base_repeat_prob",
          "must be in [0,1]");
  require(is_probability(synthetic_variant_noise), "synthetic_variant_noise",
          "must be in [0,1]");
  require(is_probability(real_base_noise), "real_base_noise",
          "must be in [0,1]");
  require(speaker_count >= 1, "speaker_count", "must be >= 1");
}

const char* to_string(Source s) noexcept {
  switch (s) {
    case Source::kReal:
      return "real";
    case Source::kSynthetic:
      return "synthetic";
    case Source::kGenerated:
      return "generated";
  }
  return "unknown";
}

Corpus::Corpus(std::vector<Utterance> items) : items_(std::move(items)) {
  recount();
}

std::size_t Corpus::real_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(),
                    [](const Utterance& u) { return u.source == Source::kReal; }));
}

void Corpus::append(const Corpus& other) {
  items_.insert(items_.end(), other.items_.begin(), other.items_.end());
  recount();
}

void Corpus::recount() {
  synthetic_count_ = static_cast<std::size_t>(std::count_if(
      items_.begin(), items_.end(),
      [](const Utterance& u) { return u.source == Source::kSynthetic; }));
  alpha_ = items_.empty() ? 0.0
                          : static_cast<double>(synthetic_count_) /
                                static_cast<double>(items_.size());
}

World::World(WorldConfig config, std::vector<Prompt> prompts,
             std::vector<std::vector<double>> variant_distributions)
    : config_(config),
      vocab_(config.base_symbol_count, config.variant_count),
      prompts_(std::move(prompts)),
      variant_distributions_(std::move(variant_distributions)) {
  config_.validate();
  if (prompts_.size() != config_.prompt_count ||
      variant_distributions_.size() != prompts_.size()) {
    throw ConfigError("world.prompt_count",
                      "prompt table does not match prompt_count");
  }
  for (std::size_t i = 0; i < prompts_.size(); ++i) {
    const Prompt& p = prompts_[i];
    if (p.id != i || p.canonical.empty() ||
        variant_distributions_[i].size() != p.length() * config_.variant_count) {
      throw ConfigError("world.prompts", "malformed prompt " + std::to_string(i));
    }
    for (auto b : p.canonical) {
      if (b >= config_.base_symbol_count) {
        throw ConfigError("world.prompts", "base symbol out of range");
      }
    }
  }
}

const Prompt& World::prompt(std::uint32_t id) const {
  if (id >= prompts_.size()) {
    throw DomainError("prompt id " + std::to_string(id) + " out of range");
  }
  return prompts_[id];
}

std::vector<std::uint32_t> World::covered_prompt_ids() const {
  std::vector<std::uint32_t> ids;
  for (const auto& p : prompts_) {
    if (p.in_real_coverage) ids.push_back(p.id);
  }
  return ids;
}

std::span<const double> World::variant_distribution(std::uint32_t prompt_id,
                                                    std::size_t position) const {
  const auto& row = variant_distributions_.at(prompt_id);
  const std::size_t s = config_.variant_count;
  if (position * s >= row.size()) {
    throw DomainError("position out of range for prompt " +
                      std::to_string(prompt_id));
  }
  return std::span<const double>(row).subspan(position * s, s);
}

World build_world(const WorldConfig& config) {
  config.validate();
  const std::uint32_t P = config.base_symbol_count;
  const std::uint32_t S = config.variant_count;

  std::vector<Prompt> prompts(config.prompt_count);
  std::vector<std::vector<double>> dists(config.prompt_count);
  std::vector<double> shape(S, config.variant_concentration);
  shape[0] *= config.neutral_variant_weight;

  for (std::uint32_t id = 0; id < config.prompt_count; ++id) {
    Rng rng = Rng::stream(config.master_seed, "world.prompt", id);
    Prompt& p = prompts[id];
    p.id = id;
    const std::size_t len =
        config.min_length + rng.index(config.max_length - config.min_length + 1);
    p.canonical.resize(len);
    p.canonical[0] = static_cast<std::uint32_t>(rng.index(P));
    for (std::size_t i = 1; i < len; ++i) {
      if (rng.bernoulli(config.base_repeat_prob)) {
        p.canonical[i] = p.canonical[i - 1];
      } else {
        p.canonical[i] = static_cast<std::uint32_t>(
            (p.canonical[i - 1] + 1 + rng.index(P - 1)) % P);
      }
    }
    p.speaker_tag = static_cast<std::uint32_t>(rng.index(config.speaker_count));

    auto& d = dists[id];
    d.resize(len * S);
    for (std::size_t pos = 0; pos < len; ++pos) {
      double total = 0.0;
      for (std::uint32_t v = 0; v < S; ++v) {
        // Gamma draws with small shape can underflow; all probabilities stay
        // strictly positive.
        const double g = std::max(rng.gamma(shape[v]), 1e-300);
        d[pos * S + v] = g;
        total += g;
      }
      for (std::uint32_t v = 0; v < S; ++v) d[pos * S + v] /= total;
    }
  }

  std::vector<std::uint32_t> order(config.prompt_count);
  std::iota(order.begin(), order.end(), 0u);
  Rng cover_rng = Rng::stream(config.master_seed, "world.coverage");
  std::shuffle(order.begin(), order.end(), cover_rng.engine());
  const auto covered = static_cast<std::size_t>(
      std::lround(config.real_prompt_coverage * config.prompt_count));
  for (std::size_t i = 0; i < covered; ++i) prompts[order[i]].in_real_coverage = true;

  return World(config, std::move(prompts), std::move(dists));
}

Utterance sample_real_utterance(const World& world, const Prompt& prompt,
                                Rng& rng) {
  const auto& cfg = world.config();
  const Vocab& vocab = world.vocab();
  Utterance u;
  u.prompt_id = prompt.id;
  u.source = Source::kReal;
  u.speaker_tag = prompt.speaker_tag;
  u.terminated = true;
  u.tokens.reserve(prompt.length());
  for (std::size_t i = 0; i < prompt.length(); ++i) {
    std::uint32_t base = prompt.canonical[i];
    if (cfg.real_base_noise > 0.0 && rng.bernoulli(cfg.real_base_noise)) {
      base = static_cast<std::uint32_t>(
          (base + 1 + rng.index(cfg.base_symbol_count - 1)) %
          cfg.base_symbol_count);
    }
    const auto variant =
        sample_categorical(world.variant_distribution(prompt.id, i), rng);
    u.tokens.push_back(vocab.token(base, variant));
  }
  return u;
}

Utterance sample_synthetic_utterance(const World& world, const Prompt& prompt,
                                     Rng& rng) {
  const auto& cfg = world.config();
  const Vocab& vocab = world.vocab();
  Utterance u;
  u.prompt_id = prompt.id;
  u.source = Source::kSynthetic;
  u.speaker_tag = prompt.speaker_tag;
  u.terminated = true;
  u.tokens.reserve(prompt.length());
  for (std::size_t i = 0; i < prompt.length(); ++i) {
    std::uint32_t variant = 0;
    if (cfg.synthetic_variant_noise > 0.0 &&
        rng.bernoulli(cfg.synthetic_variant_noise)) {
      variant = 1 + static_cast<std::uint32_t>(rng.index(cfg.variant_count - 1));
    }
    u.tokens.push_back(vocab.token(prompt.canonical[i], variant));
  }
  return u;
}

Corpus build_mixed_corpus(const World& world, std::size_t n_real,
                          std::size_t n_synthetic, std::uint64_t seed) {
  if (n_real + n_synthetic == 0) {
    throw PreconditionError("empty corpus: n_real + n_synthetic must be >= 1");
  }
  auto covered = world.covered_prompt_ids();
  if (n_real > 0 && covered.empty()) {
    throw PreconditionError("real utterances requested but no prompt is in "
                            "real coverage");
  }
  std::vector<std::uint32_t> all(world.prompts().size());
  std::iota(all.begin(), all.end(), 0u);

  // Round-robin over a seeded permutation keeps prompt usage balanced.
  Rng order_rng = Rng::stream(seed, "corpus.order");
  std::shuffle(covered.begin(), covered.end(), order_rng.engine());
  std::shuffle(all.begin(), all.end(), order_rng.engine());

  std::vector<Utterance> items;
  items.reserve(n_real + n_synthetic);
  for (std::size_t i = 0; i < n_real; ++i) {
    Rng rng = Rng::stream(seed, "corpus.real", i);
    items.push_back(
        sample_real_utterance(world, world.prompt(covered[i % covered.size()]), rng));
  }
  for (std::size_t i = 0; i < n_synthetic; ++i) {
    Rng rng = Rng::stream(seed, "corpus.synthetic", i);
    items.push_back(
        sample_synthetic_utterance(world, world.prompt(all[i % all.size()]), rng));
  }
  Rng shuffle_rng = Rng::stream(seed, "corpus.shuffle");
  std::shuffle(items.begin(), items.end(), shuffle_rng.engine());
  return Corpus(std::move(items));
}

BaseSequence decode_tokens(const Vocab& vocab, std::span<const Token> tokens) {
  BaseSequence out;
  out.reserve(tokens.size());
  for (Token t : tokens) {
    if (t >= vocab.size()) {
      throw DomainError("token " + std::to_string(t) + " is not a vocabulary token");
    }
    out.push_back(vocab.base_of(t));
  }
  return out;
}

std::size_t edit_distance(std::span<const std::uint32_t> a,
                          std::span<const std::uint32_t> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double wer_proxy(std::span<const std::uint32_t> reference,
                 std::span<const std::uint32_t> hypothesis) {
  if (reference.empty()) throw DomainError("WER is undefined for an empty reference");
  return static_cast<double>(edit_distance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

BaseSequence corrupt_hypothesis(std::span<const std::uint32_t> hypothesis,
                                double noise_rate, std::uint32_t base_count,
                                Rng& rng) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw DomainError("noise rate must be in [0,1]");
  }
  BaseSequence out(hypothesis.begin(), hypothesis.end());
  if (noise_rate == 0.0 || base_count < 2) return out;
  for (auto& b : out) {
    if (rng.bernoulli(noise_rate)) {
      b = static_cast<std::uint32_t>((b + 1 + rng.index(base_count - 1)) % base_count);
    }
  }
  return out;
}

nlohmann::json world_to_json(const World& world) {
  const auto& c = world.config();
  nlohmann::json doc;
  doc["format"] = "erosionlab.world";
  doc["version"] = kWorldFormatVersion;
  doc["config"] = {
      {"base_symbol_count", c.base_symbol_count},
      {"variant_count", c.variant_count},
      {"prompt_count", c.prompt_count},
      {"min_length", c.min_length},
      {"max_length", c.max_length},
      {"real_prompt_coverage", c.real_prompt_coverage},
      {"variant_concentration", c.variant_concentration},
      {"neutral_variant_weight", c.neutral_variant_weight},
      {"base_repeat_prob", c.base_repeat_prob},
      {"synthetic_variant_noise", c.synthetic_variant_noise},
      {"real_base_noise", c.real_base_noise},
      {"speaker_count", c.speaker_count},
      {"master_seed", c.master_seed},
  };
  auto& prompts = doc["prompts"] = nlohmann::json::array();
  for (const auto& p : world.prompts()) {
    std::vector<double> dist;
    for (std::size_t i = 0; i < p.length(); ++i) {
      auto d = world.variant_distribution(p.id, i);
      dist.insert(dist.end(), d.begin(), d.end());
    }
    prompts.push_back({{"id", p.id},
                       {"canonical", p.canonical},
                       {"speaker_tag", p.speaker_tag},
                       {"in_real_coverage", p.in_real_coverage},
                       {"variant_distributions", dist}});
  }
  return doc;
}

World world_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "erosionlab.world") {
      throw ConfigError("world.format", "not an erosionlab world document");
    }
    if (doc.at("version").get<int>() != kWorldFormatVersion) {
      throw ConfigError("world.version", "unsupported world format version");
    }
    const auto& j = doc.at("config");
    WorldConfig c;
    c.base_symbol_count = j.at("base_symbol_count");
    c.variant_count = j.at("variant_count");
    c.prompt_count = j.at("prompt_count");
    c.min_length = j.at("min_length");
    c.max_length = j.at("max_length");
    c.real_prompt_coverage = j.at("real_prompt_coverage");
    c.variant_concentration = j.at("variant_concentration");
    c.neutral_variant_weight = j.at("neutral_variant_weight");
    c.base_repeat_prob = j.at("base_repeat_prob");
    c.synthetic_variant_noise = j.at("synthetic_variant_noise");
    c.real_base_noise = j.at("real_base_noise");
    c.speaker_count = j.at("speaker_count");
    c.master_seed = j.at("master_seed");

    std::vector<Prompt> prompts;
    std::vector<std::vector<double>> dists;
    for (const auto& jp : doc.at("prompts")) {
      Prompt p;
      p.id = jp.at("id");
      p.canonical = jp.at("canonical").get<BaseSequence>();
      p.speaker_tag = jp.at("speaker_tag");
      p.in_real_coverage = jp.at("in_real_coverage");
      prompts.push_back(std::move(p));
      dists.push_back(jp.at("variant_distributions").get<std::vector<double>>());
    }
    return World(c, std::move(prompts), std::move(dists));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("world", std::string("malformed world document: ") + e.what());
  }
}

}  // namespace erosion
