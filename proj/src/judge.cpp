// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/judge.hpp"

#include <cmath>

#include "erosion/diagnostics.hpp"
#include "erosion/errors.hpp"

namespace erosion {

void JudgeConfig::validate() const {
  if (!(tau_wer > 0.0)) throw ConfigError("judge.tau_wer", "must be > 0");
  if (!(tau_repetition > 0.0)) {
    throw ConfigError("judge.tau_repetition", "must be > 0");
  }
  if (!(gamma_min > 0.0)) throw ConfigError("judge.gamma_min", "must be > 0");
  if (!(gamma_max > gamma_min)) {
    throw ConfigError("judge.gamma_max", "must exceed gamma_min");
  }
  if (!(asr_noise >= 0.0 && asr_noise <= 1.0)) {
    throw ConfigError("judge.asr_noise", "must be in [0,1]");
  }
  if (repetition_window < 1) {
    throw ConfigError("judge.repetition_window", "must be >= 1");
  }
}

std::string describe_reasons(std::uint8_t reasons) {
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (reasons & kFailWer) add("wer");
  if (reasons & kFailRepetition) add("repetition");
  if (reasons & kFailLength) add("length");
  return out;
}

JudgeVerdict apply_criteria(double wer, double repetition,
                            std::size_t candidate_length,
                            std::size_t prompt_length, const JudgeConfig& config) {
  JudgeVerdict v;
  v.wer = wer;
  v.repetition = repetition;
  const double len = static_cast<double>(candidate_length);
  const double ref = static_cast<double>(prompt_length);
  v.length_ratio = len / ref;
  if (!(wer < config.tau_wer)) v.failure_reasons |= kFailWer;
  if (!(repetition < config.tau_repetition)) v.failure_reasons |= kFailRepetition;
  if (!(len >= config.gamma_min * ref && len <= config.gamma_max * ref)) {
    v.failure_reasons |= kFailLength;
  }
  v.accepted = v.failure_reasons == 0;
  return v;
}

JudgeVerdict judge_candidate(const World& world, const Prompt& prompt,
                             std::span<const Token> candidate,
                             const JudgeConfig& config, Rng& rng) {
  BaseSequence hyp = decode_tokens(world.vocab(), candidate);
  if (config.asr_noise > 0.0) {
    hyp = corrupt_hypothesis(hyp, config.asr_noise,
                             world.config().base_symbol_count, rng);
  }
  return apply_criteria(wer_proxy(prompt.canonical, hyp),
                        repetition_rate(candidate, config.repetition_window),
                        candidate.size(), prompt.length(), config);
}

}  // namespace erosion
