#pragma once

#include "pathmkv/hilbert.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pathmkv {

/// Uniform grid t_j = j T / M on [0, T].
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double horizon, std::size_t steps);

    double horizon() const noexcept { return T_; }
    std::size_t steps() const noexcept { return M_; }
    std::size_t nodes() const noexcept { return M_ + 1; }
    double dt() const noexcept { return T_ / static_cast<double>(M_); }
    double time(std::size_t j) const { return T_ * static_cast<double>(j) / static_cast<double>(M_); }

    /// Index of the grid node nearest to t. Throws DomainError outside [0, T].
    std::size_t snap(double t) const;

    bool operator==(const TimeGrid&) const = default;

private:
    double T_ = 1.0;
    std::size_t M_ = 1;
};

class PathGrid;

/// Read-only view of a path, optionally stopped at a node: values after the
/// stop node read as the value at the stop node. Valid while the viewed
/// PathGrid is alive and unmodified.
class PathView {
public:
    PathView() = default;
    PathView(const TimeGrid& grid, const double* data, std::size_t dim, std::size_t stop_node)
        : grid_(grid), data_(data), dim_(dim), stop_(stop_node) {}

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t stop_node() const noexcept { return stop_; }

    /// x_{t_j ∧ stop}
    std::span<const double> at(std::size_t j) const {
        return {data_ + (j < stop_ ? j : stop_) * dim_, dim_};
    }
    HilbertVec value(std::size_t j) const { return HilbertVec(at(j)); }

    PathView stopped(std::size_t node) const { return {grid_, data_, dim_, node < stop_ ? node : stop_}; }

    /// ||x||_{t_node}: max over nodes s <= node of |x_s|_H.
    double sup_norm_until(std::size_t node) const;
    double sup_norm() const { return sup_norm_until(grid_.steps()); }

    PathGrid materialize() const;

private:
    TimeGrid grid_;
    const double* data_ = nullptr;
    std::size_t dim_ = 0;
    std::size_t stop_ = 0;
};

/// H-valued path sampled on a TimeGrid, stored densely (node-major).
class PathGrid {
public:
    PathGrid() = default;
    PathGrid(TimeGrid grid, std::size_t dim);
    PathGrid(TimeGrid grid, std::size_t dim, std::vector<double> values);

    static PathGrid constant(TimeGrid grid, const HilbertVec& c);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t nodes() const noexcept { return grid_.nodes(); }

    std::span<const double> at(std::size_t j) const { return {values_.data() + j * dim_, dim_}; }
    std::span<double> at(std::size_t j) { return {values_.data() + j * dim_, dim_}; }
    HilbertVec value(std::size_t j) const { return HilbertVec(at(j)); }
    void set(std::size_t j, const HilbertVec& v);

    const std::vector<double>& data() const noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }

    PathView view() const { return {grid_, values_.data(), dim_, grid_.steps()}; }

    bool operator==(const PathGrid&) const = default;

private:
    TimeGrid grid_;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

/// x_{· ∧ t}, with t snapped to the nearest node.
PathGrid stop(const PathGrid& x, double t);
PathGrid stop_at_node(const PathGrid& x, std::size_t node);

/// x + h 1_{[t,T]}: the bump holds from the node at t inclusive.
PathGrid bump(const PathGrid& x, double t, const HilbertVec& h);
PathGrid bump_at_node(const PathGrid& x, std::size_t node, const HilbertVec& h);

/// ||x||_t = max_{s <= t} |x_s|_H over grid nodes.
double sup_seminorm(const PathGrid& x, double t);
double sup_norm(const PathGrid& x);

PathGrid operator-(const PathGrid& a, const PathGrid& b);

/// CSV with header `t,c1,...,cd` and 17 significant digits.
void write_path_csv(std::ostream& out, const PathGrid& x);
PathGrid read_path_csv(std::istream& in);
std::string format_double(double v);

} // namespace pathmkv
