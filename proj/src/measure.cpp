#include "pathmkv/measure.hpp"

#include "pathmkv/errors.hpp"
#include "pathmkv/noise.hpp"
#include "pathmkv/parallel.hpp"
#include "pathmkv/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace pathmkv {

namespace {

void check_weights(std::span<const double> w, std::size_t n) {
    if (w.size() != n) throw ConfigError("measure: one weight per atom required");
    if (n == 0) throw ConfigError("measure: at least one atom required");
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("measure: weights must be finite and nonnegative");
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("measure: weights must sum to 1");
}

std::vector<double> equal_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

bool is_uniform(std::span<const double> w) {
    return std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); });
}

void require_compatible(const MeasureView& mu, const MeasureView& nu) {
    if (!(mu.grid() == nu.grid()) || mu.dim() != nu.dim()) {
        throw ConfigError("measures live on different grids or spaces; resample first");
    }
}

double path_distance_squared(const PathView& x, const PathView& y) {
    double best = 0.0;
    const std::size_t nodes = x.grid().nodes();
    for (std::size_t j = 0; j < nodes; ++j) {
        const auto a = x.at(j);
        const auto b = y.at(j);
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double diff = a[k] - b[k];
            s += diff * diff;
        }
        best = std::max(best, s);
    }
    return best;
}

} // namespace

MeasureView::MeasureView(std::vector<PathView> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    check_weights(weights_, atoms_.size());
    for (const auto& a : atoms_) {
        if (!(a.grid() == atoms_.front().grid()) || a.dim() != atoms_.front().dim()) {
            throw ConfigError("measure atoms must share one grid and dimension");
        }
    }
}

MeasureView::MeasureView(std::vector<PathView> atoms) : MeasureView(atoms, equal_weights(atoms.size())) {}

MeasureView MeasureView::stopped(std::size_t node) const {
    MeasureView out = *this;
    for (auto& a : out.atoms_) a = a.stopped(node);
    return out;
}

MeasureView MeasureView::with_atom(std::size_t i, PathView replacement) const {
    MeasureView out = *this;
    out.atoms_.at(i) = replacement;
    return out;
}

EmpiricalPathMeasure::EmpiricalPathMeasure(std::vector<PathGrid> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    check_weights(weights_, atoms_.size());
    for (const auto& a : atoms_) {
        if (!(a.grid() == atoms_.front().grid()) || a.dim() != atoms_.front().dim()) {
            throw ConfigError("measure atoms must share one grid and dimension");
        }
    }
}

EmpiricalPathMeasure EmpiricalPathMeasure::uniform(std::vector<PathGrid> atoms) {
    const std::size_t n = atoms.size();
    return EmpiricalPathMeasure(std::move(atoms), equal_weights(n));
}

MeasureView EmpiricalPathMeasure::view() const {
    std::vector<PathView> views;
    views.reserve(atoms_.size());
    for (const auto& a : atoms_) views.push_back(a.view());
    return MeasureView(std::move(views), weights_);
}

EmpiricalControlMeasure::EmpiricalControlMeasure(std::vector<ControlAction> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    check_weights(weights_, atoms_.size());
    for (const auto& a : atoms_) {
        if (a.u.size() != atoms_.front().u.size()) throw ConfigError("control atoms must share one dimension");
    }
}

EmpiricalControlMeasure EmpiricalControlMeasure::uniform(std::vector<ControlAction> atoms) {
    const std::size_t n = atoms.size();
    return EmpiricalControlMeasure(std::move(atoms), equal_weights(n));
}

std::vector<double> EmpiricalControlMeasure::mean() const {
    std::vector<double> m(atoms_.front().u.size(), 0.0);
    for (std::size_t i = 0; i < atoms_.size(); ++i)
        for (std::size_t k = 0; k < m.size(); ++k) m[k] += weights_[i] * atoms_[i].u[k];
    return m;
}

EmpiricalPathMeasure stopped_measure(const EmpiricalPathMeasure& mu, double t) {
    const std::size_t node = mu.grid().snap(t);
    std::vector<PathGrid> atoms;
    atoms.reserve(mu.size());
    for (const auto& a : mu.atoms()) atoms.push_back(stop_at_node(a, node));
    return EmpiricalPathMeasure(std::move(atoms), mu.weights());
}

W2Result wasserstein2(const MeasureView& mu, const MeasureView& nu, W2Mode mode, const SlicedOptions& opts) {
    require_compatible(mu, nu);
    const std::size_t n = mu.size();
    const std::size_t m = nu.size();
    if (mode == W2Mode::exact) {
        if (n > kExactW2Cap || m > kExactW2Cap) {
            throw CapacityError("exact W2 supports at most " + std::to_string(kExactW2Cap) +
                                " atoms per measure; use sliced mode");
        }
        std::vector<double> cost(n * m);
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = path_distance_squared(mu.atom(i), nu.atom(j));
        });
        double total = 0.0;
        if (n == m && is_uniform(mu.weights()) && is_uniform(nu.weights())) {
            total = solve_assignment(cost, n).cost / static_cast<double>(n);
        } else {
            total = solve_transport(cost, mu.weights(), nu.weights()).cost;
        }
        return {std::sqrt(std::max(0.0, total)), 0};
    }

    const std::size_t nodes = mu.grid().nodes();
    const std::size_t dim = mu.dim();
    const std::size_t D = nodes * dim;
    if (opts.projections == 0) throw ConfigError("sliced W2 needs at least one projection");
    // Directions come in complete orthonormal frames: the columns of H S, where
    // H = I - 2 v v^T / |v|^2 is a random Householder reflection and S a random
    // diagonal of signs. Projecting onto a frame then costs O(D) per atom.
    const std::size_t frames = (opts.projections + D - 1) / D;
    std::vector<double> per_frame(frames);
    parallel_for(frames, [&](std::size_t f) {
        std::vector<double> v(D), sign(D);
        double vv = 0.0;
        for (std::size_t q = 0; q < D; ++q) {
            v[q] = keyed_normal(opts.seed, Stream::projection, f, q);
            sign[q] = keyed_uniform(opts.seed, Stream::projection, f, q, 1) < 0.5 ? -1.0 : 1.0;
            vv += v[q] * v[q];
        }
        auto project_all = [&](const MeasureView& m) {
            // row i holds the D projections of atom i
            std::vector<double> out(m.size() * D);
            for (std::size_t i = 0; i < m.size(); ++i) {
                const PathView& x = m.atom(i);
                double vx = 0.0;
                for (std::size_t j = 0; j < nodes; ++j) {
                    const auto a = x.at(j);
                    for (std::size_t k = 0; k < dim; ++k) vx += v[j * dim + k] * a[k];
                }
                const double c = 2.0 * vx / vv;
                for (std::size_t j = 0; j < nodes; ++j) {
                    const auto a = x.at(j);
                    for (std::size_t k = 0; k < dim; ++k) {
                        const std::size_t q = j * dim + k;
                        out[i * D + q] = sign[q] * (a[k] - c * v[q]);
                    }
                }
            }
            return out;
        };
        const auto px = project_all(mu);
        const auto py = project_all(nu);
        std::vector<double> xs(n), ys(m), costs(D);
        for (std::size_t q = 0; q < D; ++q) {
            for (std::size_t i = 0; i < n; ++i) xs[i] = px[i * D + q];
            for (std::size_t j = 0; j < m; ++j) ys[j] = py[j * D + q];
            costs[q] = wasserstein2_squared_1d(xs, mu.weights(), ys, nu.weights());
        }
        per_frame[f] = pairwise_sum(costs.data(), D) / static_cast<double>(D);
    });
    const double mean = pairwise_sum(per_frame.data(), frames) / static_cast<double>(frames);
    return {std::sqrt(std::max(0.0, mean * static_cast<double>(dim))), frames * D};
}

double wasserstein2(const EmpiricalPathMeasure& mu, const EmpiricalPathMeasure& nu, W2Mode mode) {
    return wasserstein2(mu.view(), nu.view(), mode).distance;
}

double wasserstein2_to_zero(const MeasureView& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double r = mu.atom(i).sup_norm();
        s += mu.weight(i) * r * r;
    }
    return std::sqrt(s);
}

double marginal_wasserstein2(const MeasureView& mu, const MeasureView& nu, std::size_t node) {
    require_compatible(mu, nu);
    if (mu.dim() != 1) throw ConfigError("marginal W2 is exact only for scalar paths");
    std::vector<double> x(mu.size()), y(nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) x[i] = mu.atom(i).at(node)[0];
    for (std::size_t j = 0; j < nu.size(); ++j) y[j] = nu.atom(j).at(node)[0];
    return std::sqrt(std::max(0.0, wasserstein2_squared_1d(x, mu.weights(), y, nu.weights())));
}

double control_wasserstein2(const EmpiricalControlMeasure& a, const EmpiricalControlMeasure& b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (a.atom(0).u.size() != b.atom(0).u.size()) throw ConfigError("control laws on different spaces");
    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.atom(i).u.size(); ++k) {
                const double diff = a.atom(i).u[k] - b.atom(j).u[k];
                s += diff * diff;
            }
            cost[i * m + j] = s;
        }
    }
    return std::sqrt(std::max(0.0, solve_transport(cost, a.weights(), b.weights()).cost));
}

HilbertVec mean_at_node(const MeasureView& mu, std::size_t node) {
    HilbertVec m(mu.dim());
    std::vector<double> terms(mu.size());
    for (std::size_t k = 0; k < mu.dim(); ++k) {
        for (std::size_t i = 0; i < mu.size(); ++i) terms[i] = mu.weight(i) * mu.atom(i).at(node)[k];
        m[k] = pairwise_sum(terms.data(), terms.size());
    }
    return m;
}

HilbertVec mean_at(const MeasureView& mu, double t) { return mean_at_node(mu, mu.grid().snap(t)); }

void write_measure_csv(std::ostream& out, const EmpiricalPathMeasure& mu) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out << "atom," << i << ",weight," << format_double(mu.weight(i)) << '\n';
        write_path_csv(out, mu.atom(i));
    }
}

} // namespace pathmkv
