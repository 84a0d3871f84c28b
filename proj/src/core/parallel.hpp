// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace xjac {

/// Worker count: `requested` if positive, else hardware concurrency; capped
/// by the XJAC_THREADS environment variable when set.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace xjac
