#pragma once

// Internal parallelism. Compute functions stay pure; callers own all mutable
// state; parallel_for partitions a contiguous index range over worker
// threads. Results must be written to per-index slots so the outcome is
// independent of the thread count; any reduction happens sequentially
// afterwards in index order.

#include <functional>

namespace a2flow {

void set_thread_count(int n);  // n >= 1
int thread_count();

void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace a2flow
