#pragma once

#include <cstddef>
#include <functional>

namespace pairdiff {

/// Worker count: PAIRDIFF_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 selects
/// worker_count()). Each index runs exactly once; callers write results by
/// index, so output never depends on scheduling. If any body throws, the
/// exception of the smallest failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace pairdiff
