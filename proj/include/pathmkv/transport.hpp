#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pathmkv {

/// Minimum-cost perfect matching on an n x n cost matrix (row-major).
struct Assignment {
    double cost = 0.0;
    std::vector<std::size_t> column_of_row;
};
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

/// Discrete optimal transport between weighted supports.
struct TransportPlan {
    double cost = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> flow;  ///< rows x cols, row-major
};

/// Solves min sum c_ij f_ij subject to row sums a and column sums b by
/// successive shortest augmenting paths with Johnson potentials. a and b must
/// be nonnegative with equal totals.
TransportPlan solve_transport(std::span<const double> cost, std::span<const double> a, std::span<const double> b);

/// Squared W2 between weighted point masses on the real line (quantile coupling).
double wasserstein2_squared_1d(std::span<const double> x, std::span<const double> wx, std::span<const double> y,
                               std::span<const double> wy);

} // namespace pathmkv
