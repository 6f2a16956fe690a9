#pragma once

#include <cstddef>
#include <functional>

namespace mhfx {

// Runs fn(i) for i in [0, n) on up to `jobs` threads (0 = hardware concurrency). Work items must write to
// disjoint outputs; the first exception thrown by any item is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

// Pairwise (tree) sum in index order; the result does not depend on the thread count.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace mhfx
