#include "pathmkv/pathspace.hpp"

#include "pathmkv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace pathmkv {

TimeGrid::TimeGrid(double horizon, std::size_t steps) : T_(horizon), M_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("time horizon must be positive");
    if (steps < 1) throw ConfigError("time grid needs at least one step");
}

std::size_t TimeGrid::snap(double t) const {
    const double slack = 1e-12 * T_;
    if (!(t >= -slack && t <= T_ + slack)) {
        throw DomainError("time " + std::to_string(t) + " outside [0, " + std::to_string(T_) + "]");
    }
    const double pos = std::clamp(t / dt(), 0.0, static_cast<double>(M_));
    return static_cast<std::size_t>(std::llround(pos));
}

double PathView::sup_norm_until(std::size_t node) const {
    const std::size_t last = std::min(node, grid_.steps());
    double best = 0.0;
    for (std::size_t j = 0; j <= last; ++j) best = std::max(best, inner(at(j), at(j)));
    return std::sqrt(best);
}

PathGrid PathView::materialize() const {
    PathGrid out(grid_, dim_);
    for (std::size_t j = 0; j < grid_.nodes(); ++j) std::copy_n(at(j).data(), dim_, out.at(j).data());
    return out;
}

PathGrid::PathGrid(TimeGrid grid, std::size_t dim) : grid_(grid), dim_(dim), values_(grid.nodes() * dim, 0.0) {
    if (dim < 1) throw ConfigError("path dimension must be >= 1");
}

PathGrid::PathGrid(TimeGrid grid, std::size_t dim, std::vector<double> values)
    : grid_(grid), dim_(dim), values_(std::move(values)) {
    if (dim < 1) throw ConfigError("path dimension must be >= 1");
    if (values_.size() != grid_.nodes() * dim_) throw ConfigError("path storage does not match (M+1) x d");
}

PathGrid PathGrid::constant(TimeGrid grid, const HilbertVec& c) {
    PathGrid p(grid, c.size());
    for (std::size_t j = 0; j < p.nodes(); ++j) p.set(j, c);
    return p;
}

void PathGrid::set(std::size_t j, const HilbertVec& v) {
    if (v.size() != dim_) throw ConfigError("path value dimension mismatch");
    std::copy(v.coords().begin(), v.coords().end(), at(j).begin());
}

PathGrid stop_at_node(const PathGrid& x, std::size_t node) { return x.view().stopped(node).materialize(); }

PathGrid stop(const PathGrid& x, double t) { return stop_at_node(x, x.grid().snap(t)); }

PathGrid bump_at_node(const PathGrid& x, std::size_t node, const HilbertVec& h) {
    if (h.size() != x.dim()) throw ConfigError("bump direction dimension mismatch");
    PathGrid y = x;
    for (std::size_t j = node; j < y.nodes(); ++j) {
        auto row = y.at(j);
        for (std::size_t k = 0; k < row.size(); ++k) row[k] += h[k];
    }
    return y;
}

PathGrid bump(const PathGrid& x, double t, const HilbertVec& h) { return bump_at_node(x, x.grid().snap(t), h); }

double sup_seminorm(const PathGrid& x, double t) { return x.view().sup_norm_until(x.grid().snap(t)); }

double sup_norm(const PathGrid& x) { return x.view().sup_norm(); }

PathGrid operator-(const PathGrid& a, const PathGrid& b) {
    if (!(a.grid() == b.grid()) || a.dim() != b.dim()) throw ConfigError("path difference needs a common grid");
    PathGrid out = a;
    for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] -= b.data()[k];
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_path_csv(std::ostream& out, const PathGrid& x) {
    out << 't';
    for (std::size_t k = 1; k <= x.dim(); ++k) out << ",c" << k;
    out << '\n';
    for (std::size_t j = 0; j < x.nodes(); ++j) {
        out << format_double(x.grid().time(j));
        for (double v : x.at(j)) out << ',' << format_double(v);
        out << '\n';
    }
}

PathGrid read_path_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("path CSV: missing header");
    const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    if (line.rfind("t,", 0) != 0 || dim < 1) throw ConfigError("path CSV: header must be t,c1..cd");
    std::vector<double> times;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        std::istringstream row(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(row, cell, ',')) {
            const double v = std::stod(cell);
            if (col == 0) times.push_back(v); else values.push_back(v);
            ++col;
        }
        if (col != dim + 1) throw ConfigError("path CSV: row has " + std::to_string(col) + " cells");
    }
    if (times.size() < 2) throw ConfigError("path CSV: need at least two grid nodes");
    TimeGrid grid(times.back(), times.size() - 1);
    return PathGrid(grid, dim, std::move(values));
}

} // namespace pathmkv
