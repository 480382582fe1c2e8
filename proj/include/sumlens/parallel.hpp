#pragma once

#include <cstddef>
#include <functional>

namespace sumlens {

// SUMLENS_JOBS if set to a positive integer, otherwise hardware concurrency (≥ 1).
std::size_t default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is handed out by an
// atomic counter; results must be written by index for determinism. The first
// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace sumlens
