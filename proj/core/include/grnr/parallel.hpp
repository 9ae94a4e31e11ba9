#pragma once

#include <functional>

namespace grnr {

/// Resolves a --threads style request: 0 means every hardware thread.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) over `threads` workers with a static
/// contiguous partition. The first exception (lowest index) is rethrown
/// after all workers have joined.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace grnr
