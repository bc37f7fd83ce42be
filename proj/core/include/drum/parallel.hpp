#pragma once

#include <cstddef>
#include <functional>

namespace drum {

/// Worker count: set_worker_count() override, else DRUM_THREADS, else hardware concurrency.
std::size_t worker_count();
/// 0 clears the override.
void set_worker_count(std::size_t n);

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index runs
/// exactly once; callers write results by index, so output order never depends
/// on scheduling. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace drum
