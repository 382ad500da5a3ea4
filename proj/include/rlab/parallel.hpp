#pragma once

#include <functional>

namespace rlab {

/// Worker cap: RL_LAB_THREADS when set, hardware concurrency otherwise.
int worker_count();

/// Runs fn(0..n-1) across workers. Callers own determinism: write results
/// by index, never append.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace rlab
