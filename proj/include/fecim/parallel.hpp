#pragma once

#include <cstdint>
#include <functional>

namespace fecim {

// Runs fn(i) for i in [0, n) across `threads` workers (0 = hardware
// concurrency). Work is split into contiguous chunks; callers index results
// by i so the outcome is independent of the worker count.
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

int resolve_threads(int requested);

} // namespace fecim
