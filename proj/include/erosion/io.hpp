// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace erosion {

/// Whole file as bytes. Throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`, so readers see
/// either the old file or the complete new one. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Creates `dir` and its parents. Throws IoError.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace erosion
