#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace qp {

// Runs fn(i) for every i in [0, count) on up to `threads` workers, each worker
// taking one contiguous chunk.  Callers must write results into disjoint
// per-index slots; under that contract the outcome is independent of the
// worker count.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// Fixed-order pairwise reduction: split at the midpoint, recurse, add.
// Bit-identical regardless of how the inputs were produced (thread count,
// chunking), which is what the reproducibility contract rests on.
double tree_sum(std::span<const double> values);
double tree_mean(std::span<const double> values);

}  // namespace qp
