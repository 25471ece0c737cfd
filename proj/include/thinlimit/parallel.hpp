#pragma once

#include <cstddef>
#include <functional>

namespace thinlimit {

/// Worker cap: THINLIMIT_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
int worker_count();

/// Runs body(begin, end) over fixed-size chunks of [0, count). Chunk
/// boundaries do not depend on the worker count, so callers that write
/// per-index results and reduce them in index order stay bit-reproducible.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace thinlimit
