// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary policy checkpoints. Layout, all little-endian:
//
//   "ERLB"                       4 bytes
//   version                      u32
//   P, S                         u32 each
//   base features (P + 1)        u32
//   previous features (|V| + 1)  u32
//   outcomes (|V| + 1)           u32
//   logits                       f64, row-major (base, previous, outcome)
//
// A JSON sidecar at "<path>.json" records the parameter hash and caller
// metadata.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "erosion/policy.hpp"

namespace erosion {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::byte> encode_checkpoint(const PolicyParams& params);

/// Throws CheckpointError: kBadMagic, kUnsupportedVersion, or
/// kDimensionMismatch for inconsistent or truncated contents.
PolicyParams decode_checkpoint(std::span<const std::byte> bytes);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Writes the checkpoint and its sidecar atomically. `metadata` is stored
/// under "metadata".
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());

PolicyParams load_checkpoint(const std::filesystem::path& path);

/// The sidecar document. Throws IoError if missing or malformed.
nlohmann::json load_checkpoint_metadata(const std::filesystem::path& path);

}  // namespace erosion
