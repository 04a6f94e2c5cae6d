#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace tubewcp {

/// Worker-thread cap: TUBEWCP_THREADS if set, else hardware concurrency.
int thread_cap();

/// Runs fn(i) for i in [0, n). Chunked across threads when profitable;
/// results must be written to disjoint slots so the order of execution
/// cannot change the outcome.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Pairwise (cascade) summation over a fixed layout. The reduction tree
/// depends only on v.size(), never on thread count, so sums are
/// bit-reproducible.
double fixed_order_sum(std::span<const double> v);

}  // namespace tubewcp
