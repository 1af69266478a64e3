#pragma once

#include <cstddef>
#include <functional>

namespace synsem {

/// Resolves a requested worker count: 0 means hardware concurrency,
/// overridden by the SYNSEM_WORKERS environment variable when set.
int resolve_workers(int requested);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks are claimed
/// from a shared counter; each task must write only its own output slot.
/// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace synsem
