// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace erosion {

/// Process-wide worker count for parallel_for (default 1).
void set_worker_threads(std::size_t n);
std::size_t worker_threads();

/// Runs body(i) for i in [0, n). Bodies must write only to their own slot.
/// Nested calls run sequentially. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace erosion
