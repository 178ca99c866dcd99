#pragma once

#include <cstddef>
#include <functional>

namespace tsdm {

/// Upper bound on worker threads used by library-internal parallel loops.
/// 0 means "available hardware parallelism".
void set_max_threads(std::size_t threads);
std::size_t max_threads();

/// Runs body(i) for i in [0, count), split into contiguous chunks over at most
/// max_threads() workers. body must only write to per-index state. The first
/// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace tsdm
