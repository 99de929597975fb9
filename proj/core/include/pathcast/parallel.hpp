#pragma once

#include <cstddef>
#include <functional>

namespace pathcast {

// Thread cap: min(PATHCAST_THREADS, hardware_concurrency), at least 1.
std::size_t max_threads();

// Runs fn(i) for i in [0, n). Work is split into contiguous index blocks;
// fn must only write state owned by index i so results are order independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pathcast
