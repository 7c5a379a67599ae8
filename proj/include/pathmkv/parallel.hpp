#pragma once

#include <cstddef>
#include <functional>

namespace pathmkv {

/// Number of worker threads used by parallel loops (>= 1).
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker. Bodies must only write to per-index state; results therefore do not
/// depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise (cascade) summation with a fixed association order.
double pairwise_sum(const double* values, std::size_t n);

} // namespace pathmkv
