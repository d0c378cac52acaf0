#pragma once

#include <cstddef>
#include <functional>

namespace voliv {

// Worker count: hardware concurrency, capped by VOLIV_THREADS when set.
int thread_count();

// Calls body(i) for every i in [0, n). Each index runs exactly once and
// results must be written to per-index slots, so output never depends on
// scheduling. If bodies throw, the exception of the lowest index is rethrown
// after all indices have run.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace voliv
