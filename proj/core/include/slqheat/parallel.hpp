#pragma once
#include <functional>

namespace slqheat {

// Process-wide worker-thread count used by the path and loading loops.
// Defaults to 1 (fully sequential). Results are bitwise independent of the
// thread count: every parallel loop writes to disjoint, preallocated slots.
void set_worker_threads(int n);
int worker_threads();

// Runs body(i) for i in [0, n), forking into contiguous chunks across at most
// `worker_threads()` std::threads. Falls back to a plain loop for small n or
// a single worker. The body must only write to slots owned by its index.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace slqheat
