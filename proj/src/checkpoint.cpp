// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "erosion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "erosion/align.hpp"
#include "erosion/errors.hpp"
#include "erosion/io.hpp"

namespace erosion {

namespace {

constexpr char kMagic[4] = {'E', 'R', 'L', 'B'};
constexpr std::size_t kHeaderWords = 6;
constexpr std::size_t kHeaderBytes = sizeof(kMagic) + 4 * kHeaderWords;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::span<const std::byte> bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  }
  return v;
}

CheckpointError mismatch(const std::string& what) {
  return CheckpointError(CheckpointError::Kind::kDimensionMismatch,
                         "checkpoint dimension mismatch: " + what);
}

}  // namespace

std::vector<std::byte> encode_checkpoint(const PolicyParams& params) {
  std::vector<std::byte> out;
  out.reserve(kHeaderBytes + 8 * params.parameter_count());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, kCheckpointVersion);
  put_u32(out, params.vocab().base_count());
  put_u32(out, params.vocab().variant_count());
  put_u32(out, static_cast<std::uint32_t>(params.base_features()));
  put_u32(out, static_cast<std::uint32_t>(params.previous_features()));
  put_u32(out, static_cast<std::uint32_t>(params.outcomes()));
  for (double x : params.logits()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

PolicyParams decode_checkpoint(std::span<const std::byte> bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(CheckpointError::Kind::kBadMagic, "not an ERLB checkpoint");
  }
  if (bytes.size() < sizeof(kMagic) + 4) throw mismatch("truncated header");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::kUnsupportedVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  if (bytes.size() < kHeaderBytes) throw mismatch("truncated header");
  std::uint32_t dims[kHeaderWords - 1];
  for (std::size_t i = 0; i < kHeaderWords - 1; ++i) {
    dims[i] = static_cast<std::uint32_t>(get_le(bytes, 8 + 4 * i, 4));
  }
  const std::uint64_t p = dims[0], s = dims[1];
  if (p < 2 || s < 2 || p > 0xffff || p * s > (1u << 20)) {
    throw mismatch("vocabulary size out of range");
  }
  const std::uint64_t v1 = p * s + 1;
  if (dims[2] != p + 1 || dims[3] != v1 || dims[4] != v1) {
    throw mismatch("context dimensions disagree with P and S");
  }
  const std::uint64_t count = (p + 1) * v1 * v1;
  if (count > (bytes.size() - kHeaderBytes) / 8 ||
      bytes.size() != kHeaderBytes + 8 * count) {
    throw mismatch("expected " + std::to_string(kHeaderBytes + 8 * count) +
                   " bytes, found " + std::to_string(bytes.size()));
  }
  PolicyParams params(Vocab(static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(s)));
  auto logits = params.logits();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] = std::bit_cast<double>(get_le(bytes, kHeaderBytes + 8 * i, 8));
  }
  return params;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path out = path;
  out += ".json";
  return out;
}

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path,
                     const nlohmann::json& metadata) {
  nlohmann::ordered_json sidecar;
  sidecar["format"] = "ERLB";
  sidecar["version"] = kCheckpointVersion;
  sidecar["base_symbol_count"] = params.vocab().base_count();
  sidecar["variant_count"] = params.vocab().variant_count();
  sidecar["params_hash"] = params_hash(params);
  sidecar["metadata"] = metadata;
  write_file_atomic(path, encode_checkpoint(params));
  write_file_atomic(sidecar_path(path), sidecar.dump(2) + "\n");
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  return decode_checkpoint(std::as_bytes(std::span(data.data(), data.size())));
}

nlohmann::json load_checkpoint_metadata(const std::filesystem::path& path) {
  const auto sidecar = sidecar_path(path);
  try {
    return nlohmann::json::parse(read_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint sidecar " + sidecar.string() + ": " + e.what());
  }
}

}  // namespace erosion
