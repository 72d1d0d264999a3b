// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and its plain-text form. A config document is a
// list of `key = value` lines with dotted keys; `#` starts a comment and a
// `[section]` line prefixes the keys that follow it.
//
//   seed = 7
//   alpha_grid = 0.1, 0.5, 1.0
//   [world]
//   prompt_count = 100

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "erosion/align.hpp"
#include "erosion/dgsa.hpp"
#include "erosion/judge.hpp"
#include "erosion/policy.hpp"
#include "erosion/tdsc.hpp"
#include "erosion/world.hpp"

namespace erosion {

enum class Method {
  kSft,
  kDgsa,
  kStandardDpo,
  kRejectionSampling,
  kSelfTraining,
  kTdsc,
};

const char* to_string(Method method) noexcept;
/// Accepts the names produced by to_string. Throws ConfigError("method").
Method parse_method(std::string_view name);

struct RejectionSamplingConfig {
  std::size_t candidates = 12;
  double temperature = 1.0;
  double nucleus_p = 0.9;

  void validate() const;
};

struct ExperimentConfig {
  /// world.master_seed is not read; each replicate derives its own.
  WorldConfig world;
  std::vector<double> alpha_grid = {0.03, 0.09, 0.15, 0.25, 0.40,
                                    0.50, 0.60, 0.67, 0.80, 1.00};
  /// Synthetic ratio of single-method runs and the alignment comparison.
  double alpha = 0.8;
  std::size_t n_real = 200;
  /// Corpus size at alpha = 1, where the real count is zero.
  std::size_t n_synthetic_pure = 1000;
  GenerationConfig evaluation = evaluation_generation();
  TrainConfig train;
  JudgeConfig judge;
  /// dgsa.alpha is replaced by the corpus ratio at run time.
  DgsaConfig dgsa;
  /// tdsc.judge and tdsc.evaluation are replaced by the top-level fields.
  TdscConfig tdsc;
  RejectionSamplingConfig rejection;
  std::uint64_t seed = 1;
  std::size_t replicates = 3;
  Method method = Method::kDgsa;

  void validate() const;

  /// tdsc with the shared judge and evaluation decoding applied.
  TdscConfig tdsc_config() const;
};

/// Every addressable key, in canonical order.
const std::vector<std::string>& config_keys();

/// Throws ConfigError(key) for unknown keys and malformed values.
void set_config_value(ExperimentConfig& config, std::string_view key,
                      std::string_view value);
std::string get_config_value(const ExperimentConfig& config, std::string_view key);

/// Applies a document on top of `base`. Does not validate.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
/// Reads and parses a file, then validates. Throws IoError if unreadable.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical document: every key in config_keys() order.
std::string serialize_config(const ExperimentConfig& config);
/// SHA-256 of serialize_config.
std::string config_hash(const ExperimentConfig& config);

}  // namespace erosion
