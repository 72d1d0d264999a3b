// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures and independent oracles for the unit tests.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "erosion/config.hpp"
#include "erosion/policy.hpp"
#include "erosion/rng.hpp"
#include "erosion/world.hpp"

namespace erosion::testing {

/// A small world: P bases, S variants, M prompts of fixed length.
inline World tiny_world(std::uint32_t p = 4, std::uint32_t s = 3, std::uint32_t m = 6,
                        std::uint32_t len = 5, std::uint64_t seed = 11) {
  WorldConfig c;
  c.base_symbol_count = p;
  c.variant_count = s;
  c.prompt_count = m;
  c.min_length = len;
  c.max_length = len;
  c.real_prompt_coverage = 0.5;
  c.master_seed = seed;
  return build_world(c);
}

/// A config small enough to run the whole lab in well under a second.
inline ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.world.base_symbol_count = 6;
  c.world.variant_count = 3;
  c.world.prompt_count = 24;
  c.world.min_length = 6;
  c.world.max_length = 10;
  c.alpha_grid = {0.2, 0.5, 1.0};
  c.alpha = 0.8;
  c.n_real = 30;
  c.n_synthetic_pure = 120;
  c.train.sft.steps = 40;
  c.train.preference.epochs = 5;
  c.tdsc.iterations = 2;
  c.tdsc.schedule.candidates_per_temperature = 2;
  c.rejection.candidates = 4;
  c.replicates = 2;
  return c;
}

/// Policy with logits drawn from N(0, scale^2).
inline PolicyParams random_policy(const Vocab& vocab, std::uint64_t seed, double scale = 1.0) {
  PolicyParams params = init_policy(vocab);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (double& x : params.logits()) x = normal(rng.engine());
  return params;
}

/// Random categorical over n outcomes (all entries > 0).
inline std::vector<double> random_distribution(std::size_t n, Rng& rng) {
  std::vector<double> d(n);
  double sum = 0.0;
  for (double& x : d) {
    x = rng.gamma(1.0) + 1e-12;
    sum += x;
  }
  for (double& x : d) x /= sum;
  return d;
}

/// Central-difference derivative of f along coordinate i of x.
inline double central_difference(std::vector<double>& x, std::size_t i,
                                 const std::function<double()>& f, double h = 1e-6) {
  const double saved = x[i];
  x[i] = saved + h;
  const double up = f();
  x[i] = saved - h;
  const double down = f();
  x[i] = saved;
  return (up - down) / (2.0 * h);
}

/// Relative error with an absolute floor, for gradient checks.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// |k - n p| <= 3 sqrt(n p (1 - p)).
inline bool within_binomial_3sigma(std::size_t k, std::size_t n, double p) {
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  return std::abs(static_cast<double>(k) - mean) <= 3.0 * sd;
}

/// Textbook O(nm) Levenshtein table, written independently of the library.
inline std::size_t levenshtein_oracle(const std::vector<std::uint32_t>& a,
                                      const std::vector<std::uint32_t>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("erosionlab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace erosion::testing
