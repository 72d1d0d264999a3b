// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// The composite judge: a candidate is accepted iff WER < tau_w,
// repetition < tau_r and tau_min*|x| <= |y| <= tau_max*|x|.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "erosion/rng.hpp"
#include "erosion/world.hpp"

namespace erosion {

struct JudgeConfig {
  double tau_wer = 0.40;
  double tau_repetition = 0.10;
  double gamma_min = 0.5;
  double gamma_max = 2.0;
  /// Probability that the imperfect recogniser substitutes a base.
  double asr_noise = 0.0;
  std::size_t repetition_window = 4;

  void validate() const;
};

enum FailureReason : std::uint8_t {
  kFailWer = 1u << 0,
  kFailRepetition = 1u << 1,
  kFailLength = 1u << 2,
};

struct JudgeVerdict {
  bool accepted = false;
  double wer = 0.0;
  double repetition = 0.0;
  double length_ratio = 0.0;
  std::uint8_t failure_reasons = 0;

  bool failed(FailureReason r) const noexcept { return (failure_reasons & r) != 0; }
  bool length_ok() const noexcept { return !failed(kFailLength); }
  bool repetition_ok() const noexcept { return !failed(kFailRepetition); }
};

std::string describe_reasons(std::uint8_t reasons);

/// Applies the three criteria to already-measured quantities.
JudgeVerdict apply_criteria(double wer, double repetition,
                            std::size_t candidate_length,
                            std::size_t prompt_length, const JudgeConfig& config);

/// Measures a candidate against its prompt's canonical content. `rng` is used
/// only when asr_noise > 0.
JudgeVerdict judge_candidate(const World& world, const Prompt& prompt,
                             std::span<const Token> candidate,
                             const JudgeConfig& config, Rng& rng);

}  // namespace erosion
