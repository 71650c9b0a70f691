#pragma once

#include <cstddef>
#include <functional>

namespace sampaudit {

/// Worker count: SAMPAUDIT_THREADS if set to a positive integer, else hardware concurrency.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = default_thread_count()).
/// Work is split into contiguous chunks; the first exception thrown is rethrown after all
/// workers finish. Results must be written to per-index slots for deterministic reductions.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

}  // namespace sampaudit
