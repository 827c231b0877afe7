#pragma once

#include <functional>

namespace l2ac {

// Parallelism hint from the L2AC_THREADS environment variable; defaults to 1.
int thread_hint();

// Runs fn(0..n-1) across up to `threads` workers in fixed contiguous chunks.
// Each index is processed exactly once, so writes into per-index slots give
// results independent of the thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace l2ac
