#pragma once

#include <cstddef>
#include <functional>

namespace chainsleuth {

// Worker count from CHAINSLEUTH_WORKERS, defaulting to hardware concurrency.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Each index is visited exactly once; callers
// write results into per-index slots so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn,
                  std::size_t workers = worker_count());

} // namespace chainsleuth
