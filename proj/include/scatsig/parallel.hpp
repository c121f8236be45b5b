#pragma once

// Index-parallel loops. Work items write to their own slot, so results are
// independent of scheduling.

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace scatsig {

// Worker count: SCATSIG_THREADS if set and positive, else the hardware count.
int worker_count();

// Runs fn(i) for i in [0, n). After all workers stop, the exception of the
// lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace scatsig
