// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace erosion {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a 64-bit hash of a component label.
std::uint64_t label_hash(std::string_view label) noexcept;

/// Seed of the stream keyed by (master, label, a, b, c).
///
/// Every stochastic call site derives its own stream from the master seed,
/// a component label and up to three integer coordinates (typically prompt
/// id, iteration and candidate index). The mixing is
///
///   s = mix64(master ^ label_hash(label))
///   s = mix64(s ^ mix64(a + 1)); s = mix64(s ^ mix64(b + 2));
///   s = mix64(s ^ mix64(c + 3))
///
/// so a stream depends only on its key, never on call order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

/// A single random stream. Not shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t master, std::string_view label,
                    std::uint64_t a = 0, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    return Rng(derive_seed(master, label, a, b, c));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  double gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace erosion
