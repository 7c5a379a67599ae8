#include "pathmkv/calculus.hpp"

#include "pathmkv/errors.hpp"
#include "pathmkv/mkv_sde.hpp"
#include "pathmkv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pathmkv {

namespace {

std::size_t node_of(const MeasureView& mu, double t) { return mu.grid().snap(t); }

/// ∑_i p_i term(i) with a fixed summation order.
template <class Term>
double weighted_sum(const MeasureView& mu, Term term) {
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) terms[i] = mu.weight(i) * term(i);
    return pairwise_sum(terms.data(), terms.size());
}

double linear_value(const MeasureView& mu, std::size_t node, const HilbertVec& h) {
    return weighted_sum(mu, [&](std::size_t i) { return inner(mu.atom(i).at(node), h.coords()); });
}

void require_dim(const MeasureView& mu, std::size_t d, const char* who) {
    if (mu.dim() != d) throw ConfigError(std::string(who) + ": functional and measure live in different spaces");
}

void require_derivatives(const CylindricalFunctional& phi, const char* op) {
    if (phi.derivative_singular) {
        throw UnsupportedFunctional(std::string(op) + ": functional '" + phi.tag + "' has no derivative of this kind");
    }
    if (!phi.eval) throw ConfigError(std::string(op) + ": functional '" + phi.tag + "' cannot be evaluated");
}

MatrixField zero_matrix_field(std::size_t d) {
    return [d](const PathView&) { return DenseMatrix(d, d); };
}

} // namespace

// ---------------------------------------------------------------- zoo

namespace zoo {

CylindricalFunctional linear(HilbertVec h) {
    CylindricalFunctional phi;
    phi.tag = "linear";
    const std::size_t d = h.size();
    phi.eval = [h](double t, const MeasureView& mu) {
        require_dim(mu, h.size(), "linear");
        return linear_value(mu, node_of(mu, t), h);
    };
    phi.dt = [](double, const MeasureView&) { return 0.0; };
    phi.dmu = [h](double, const MeasureView&) -> PathField { return [h](const PathView&) { return h; }; };
    phi.dxdmu = [d](double, const MeasureView&) { return zero_matrix_field(d); };
    return phi;
}

CylindricalFunctional mean_square(HilbertVec h) {
    CylindricalFunctional phi;
    phi.tag = "mean_square";
    const std::size_t d = h.size();
    phi.eval = [h](double t, const MeasureView& mu) {
        require_dim(mu, h.size(), "mean_square");
        const double m = linear_value(mu, node_of(mu, t), h);
        return m * m;
    };
    phi.dt = [](double, const MeasureView&) { return 0.0; };
    phi.dmu = [h](double t, const MeasureView& mu) -> PathField {
        const HilbertVec g = (2.0 * linear_value(mu, node_of(mu, t), h)) * h;
        return [g](const PathView&) { return g; };
    };
    phi.dxdmu = [d](double, const MeasureView&) { return zero_matrix_field(d); };
    return phi;
}

CylindricalFunctional mean_square_double(HilbertVec h) {
    CylindricalFunctional phi;
    phi.tag = "mean_square_double";
    const std::size_t d = h.size();
    phi.eval = [h](double t, const MeasureView& mu) {
        require_dim(mu, h.size(), "mean_square_double");
        const std::size_t node = node_of(mu, t);
        std::vector<double> a(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) a[i] = inner(mu.atom(i).at(node), h.coords());
        std::vector<double> rows(mu.size());
        std::vector<double> cols(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
            for (std::size_t j = 0; j < mu.size(); ++j) cols[j] = mu.weight(i) * mu.weight(j) * a[i] * a[j];
            rows[i] = pairwise_sum(cols.data(), cols.size());
        }
        return pairwise_sum(rows.data(), rows.size());
    };
    phi.dt = [](double, const MeasureView&) { return 0.0; };
    // ∂_mu ∫∫ k dmu dmu (x) = ∫ [∇_1 k(x, y) + ∇_2 k(y, x)] mu(dy) with k(x, y) = <x, h><y, h>
    phi.dmu = [h](double t, const MeasureView& mu) -> PathField {
        const std::size_t node = node_of(mu, t);
        HilbertVec g(h.size());
        for (std::size_t j = 0; j < mu.size(); ++j) {
            const double ky = inner(mu.atom(j).at(node), h.coords());
            g += (mu.weight(j) * ky) * h;  // ∇_1 k(x, y_j)
            g += (mu.weight(j) * ky) * h;  // ∇_2 k(y_j, x)
        }
        return [g](const PathView&) { return g; };
    };
    phi.dxdmu = [d](double, const MeasureView&) { return zero_matrix_field(d); };
    return phi;
}

CylindricalFunctional quadratic(std::vector<double> q) {
    CylindricalFunctional phi;
    phi.tag = "quadratic";
    const std::size_t d = q.size();
    phi.eval = [q](double t, const MeasureView& mu) {
        require_dim(mu, q.size(), "quadratic");
        const std::size_t node = node_of(mu, t);
        return weighted_sum(mu, [&](std::size_t i) {
            const auto x = mu.atom(i).at(node);
            double s = 0.0;
            for (std::size_t k = 0; k < q.size(); ++k) s += q[k] * x[k] * x[k];
            return s;
        });
    };
    phi.dt = [](double, const MeasureView&) { return 0.0; };
    phi.dmu = [q](double t, const MeasureView& mu) -> PathField {
        const std::size_t node = node_of(mu, t);
        return [q, node](const PathView& x) {
            HilbertVec g(q.size());
            const auto v = x.at(node);
            for (std::size_t k = 0; k < q.size(); ++k) g[k] = 2.0 * q[k] * v[k];
            return g;
        };
    };
    phi.dxdmu = [q](double, const MeasureView&) -> MatrixField {
        std::vector<double> two_q(q.size());
        for (std::size_t k = 0; k < q.size(); ++k) two_q[k] = 2.0 * q[k];
        const DenseMatrix m = DenseMatrix::diagonal(two_q);
        return [m](const PathView&) { return m; };
    };
    (void)d;
    return phi;
}

CylindricalFunctional quadratic_dense(DenseMatrix Q) {
    if (Q.rows() != Q.cols()) throw ConfigError("quadratic_dense: Q must be square");
    CylindricalFunctional phi;
    phi.tag = "quadratic_dense";
    DenseMatrix S(Q.rows(), Q.cols());
    for (std::size_t r = 0; r < Q.rows(); ++r)
        for (std::size_t c = 0; c < Q.cols(); ++c) S(r, c) = Q(r, c) + Q(c, r);
    phi.eval = [Q](double t, const MeasureView& mu) {
        require_dim(mu, Q.rows(), "quadratic_dense");
        const std::size_t node = node_of(mu, t);
        return weighted_sum(mu, [&](std::size_t i) {
            const auto x = mu.atom(i).at(node);
            double s = 0.0;
            for (std::size_t r = 0; r < Q.rows(); ++r)
                for (std::size_t c = 0; c < Q.cols(); ++c) s += x[r] * Q(r, c) * x[c];
            return s;
        });
    };
    phi.dt = [](double, const MeasureView&) { return 0.0; };
    phi.dmu = [S](double t, const MeasureView& mu) -> PathField {
        const std::size_t node = node_of(mu, t);
        return [S, node](const PathView& x) {
            HilbertVec g(S.rows());
            const auto v = x.at(node);
            for (std::size_t r = 0; r < S.rows(); ++r)
                for (std::size_t c = 0; c < S.cols(); ++c) g[r] += S(r, c) * v[c];
            return g;
        };
    };
    phi.dxdmu = [S](double, const MeasureView&) -> MatrixField { return [S](const PathView&) { return S; }; };
    return phi;
}

CylindricalFunctional sup_square() {
    CylindricalFunctional phi;
    phi.tag = "sup_square";
    phi.derivative_singular = true;
    phi.eval = [](double t, const MeasureView& mu) {
        const std::size_t node = node_of(mu, t);
        return weighted_sum(mu, [&](std::size_t i) {
            const double r = mu.atom(i).sup_norm_until(node);
            return r * r;
        });
    };
    return phi;
}

CylindricalFunctional time_weighted_linear(HilbertVec h, std::function<double(double)> k,
                                           std::function<double(double)> k_prime, std::string tag) {
    CylindricalFunctional phi;
    phi.tag = std::move(tag);
    const std::size_t d = h.size();
    phi.eval = [h, k](double t, const MeasureView& mu) {
        require_dim(mu, h.size(), "time_weighted_linear");
        return k(t) * linear_value(mu, node_of(mu, t), h);
    };
    phi.dt = [h, k_prime](double t, const MeasureView& mu) { return k_prime(t) * linear_value(mu, node_of(mu, t), h); };
    phi.dmu = [h, k](double t, const MeasureView&) -> PathField {
        const HilbertVec g = k(t) * h;
        return [g](const PathView&) { return g; };
    };
    phi.dxdmu = [d](double, const MeasureView&) { return zero_matrix_field(d); };
    return phi;
}

CylindricalFunctional time_power(HilbertVec h, int p) {
    if (p < 1) throw ConfigError("time_power: p must be >= 1");
    const double pd = static_cast<double>(p);
    return time_weighted_linear(
        std::move(h), [pd](double t) { return std::pow(t, pd); },
        [pd](double t) { return pd * std::pow(t, pd - 1.0); }, "time_power_" + std::to_string(p));
}

CylindricalFunctional constant(double c, std::size_t dim) {
    CylindricalFunctional phi;
    phi.tag = "constant";
    phi.eval = [c](double, const MeasureView&) { return c; };
    phi.dt = [](double, const MeasureView&) { return 0.0; };
    phi.dmu = [dim](double, const MeasureView&) -> PathField {
        return [dim](const PathView&) { return HilbertVec(dim); };
    };
    phi.dxdmu = [dim](double, const MeasureView&) { return zero_matrix_field(dim); };
    return phi;
}

CylindricalFunctional plus_zero(const CylindricalFunctional& phi, std::size_t dim) {
    const CylindricalFunctional zero = constant(0.0, dim);
    CylindricalFunctional out;
    out.tag = phi.tag + "+0";
    out.derivative_singular = phi.derivative_singular;
    out.eval = [phi, zero](double t, const MeasureView& mu) { return phi.eval(t, mu) + zero.eval(t, mu); };
    if (phi.dt) out.dt = [phi, zero](double t, const MeasureView& mu) { return phi.dt(t, mu) + zero.dt(t, mu); };
    if (phi.dmu) {
        out.dmu = [phi, zero](double t, const MeasureView& mu) -> PathField {
            PathField a = phi.dmu(t, mu);
            PathField b = zero.dmu(t, mu);
            return [a, b](const PathView& x) { return a(x) + b(x); };
        };
    }
    if (phi.dxdmu) {
        out.dxdmu = [phi, zero](double t, const MeasureView& mu) -> MatrixField {
            MatrixField a = phi.dxdmu(t, mu);
            MatrixField b = zero.dxdmu(t, mu);
            return [a, b](const PathView& x) {
                DenseMatrix m = a(x);
                const DenseMatrix z = b(x);
                for (std::size_t r = 0; r < m.rows(); ++r)
                    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) += z(r, c);
                return m;
            };
        };
    }
    return out;
}

CylindricalFunctional scaled(const CylindricalFunctional& phi, double c) {
    CylindricalFunctional out;
    out.tag = phi.tag + "*" + std::to_string(c);
    out.derivative_singular = phi.derivative_singular;
    out.eval = [phi, c](double t, const MeasureView& mu) { return c * phi.eval(t, mu); };
    if (phi.dt) out.dt = [phi, c](double t, const MeasureView& mu) { return c * phi.dt(t, mu); };
    if (phi.dmu) {
        out.dmu = [phi, c](double t, const MeasureView& mu) -> PathField {
            PathField a = phi.dmu(t, mu);
            return [a, c](const PathView& x) { return c * a(x); };
        };
    }
    if (phi.dxdmu) {
        out.dxdmu = [phi, c](double t, const MeasureView& mu) -> MatrixField {
            MatrixField a = phi.dxdmu(t, mu);
            return [a, c](const PathView& x) {
                DenseMatrix m = a(x);
                for (std::size_t r = 0; r < m.rows(); ++r)
                    for (std::size_t col = 0; col < m.cols(); ++col) m(r, col) *= c;
                return m;
            };
        };
    }
    return out;
}

std::vector<CylindricalFunctional> ito_members(std::size_t dim) {
    HilbertVec h(dim);
    std::vector<double> q(dim);
    DenseMatrix hh(dim, dim);
    for (std::size_t k = 0; k < dim; ++k) {
        h[k] = 1.0 / static_cast<double>(k + 1);
        q[k] = dim == 1 ? 0.6 : 0.3 + 0.6 * static_cast<double>(k) / static_cast<double>(dim - 1);
    }
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) hh(r, c) = h[r] * h[c];
    auto outer = quadratic_dense(hh);
    outer.tag = "quadratic_outer";
    return {linear(h), mean_square(h), quadratic(q), outer, time_power(h, 1), time_power(h, 2), constant(1.0, dim)};
}

} // namespace zoo

// ---------------------------------------------------------------- lifting and checks

double lifted_eval(const CylindricalFunctional& phi, double t, const LiftedSample& xi) {
    if (xi.law == nullptr || xi.index >= xi.law->size()) throw ConfigError("lifted sample does not point into its law");
    return phi.eval(t, *xi.law);
}

void check_non_anticipative(const CylindricalFunctional& phi, double t, const MeasureView& mu) {
    const std::size_t node = node_of(mu, t);
    const double a = phi.eval(t, mu);
    const double b = phi.eval(t, mu.stopped(node));
    if (!(a == b || (std::isnan(a) && std::isnan(b)))) {
        std::ostringstream os;
        os.precision(17);
        os << "functional '" << phi.tag << "' reads the measure after t = " << t << ": " << a << " vs " << b;
        throw ContractError(os.str());
    }
}

HorizontalDerivative horizontal_derivative(const CylindricalFunctional& phi, double t, const MeasureView& mu,
                                           double delta) {
    require_derivatives(phi, "horizontal_derivative");
    const TimeGrid& g = mu.grid();
    const std::size_t node = g.snap(t);
    if (!(delta > 0.0)) throw ConfigError("horizontal_derivative: delta must be > 0");
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(delta / g.dt())));
    HorizontalDerivative out;
    out.step = static_cast<double>(steps) * g.dt();

    auto difference = [&](std::size_t from) {
        check_non_anticipative(phi, g.time(from), mu);
        const MeasureView frozen = mu.stopped(from);
        return (phi.eval(g.time(from + steps), frozen) - phi.eval(g.time(from), mu)) / out.step;
    };
    if (node + steps <= g.steps()) {
        out.value = difference(node);
    } else {
        if (node < 2 * steps) throw DomainError("horizontal_derivative: grid too short for the left limit");
        out.value = 2.0 * difference(node - steps) - difference(node - 2 * steps);
    }
    if (phi.dt) out.analytic = phi.dt(g.time(node), mu);
    return out;
}

double default_measure_epsilon(const MeasureView& mu, std::size_t i) { return 1e-5 * (1.0 + mu.atom(i).sup_norm()); }

double measure_derivative_discrete(const CylindricalFunctional& phi, double t, const MeasureView& mu, std::size_t i,
                                   const HilbertVec& h, double eps) {
    require_derivatives(phi, "measure_derivative_discrete");
    if (i >= mu.size()) throw ConfigError("measure_derivative_discrete: atom index out of range");
    if (!(mu.weight(i) > 0.0)) throw DomainError("measure_derivative_discrete: atom has zero weight");
    if (!(eps > 0.0)) throw ConfigError("measure_derivative_discrete: eps must be > 0");
    if (h.size() != mu.dim()) throw ConfigError("measure_derivative_discrete: direction has the wrong dimension");
    const std::size_t node = node_of(mu, t);
    const PathGrid bumped = bump_at_node(mu.atom(i).materialize(), node, eps * h);
    const MeasureView moved = mu.with_atom(i, bumped.view());
    return (phi.eval(t, moved) - phi.eval(t, mu)) / (eps * mu.weight(i));
}

std::vector<HilbertVec> measure_derivative_field(const CylindricalFunctional& phi, double t, const MeasureView& mu,
                                                 double eps) {
    require_derivatives(phi, "measure_derivative_field");
    const std::size_t d = mu.dim();
    std::vector<HilbertVec> field(mu.size(), HilbertVec(d));
    parallel_for(mu.size(), [&](std::size_t i) {
        const double e = eps > 0.0 ? eps : default_measure_epsilon(mu, i);
        for (std::size_t k = 0; k < d; ++k)
            field[i][k] = measure_derivative_discrete(phi, t, mu, i, HilbertVec::basis(d, k), e);
    });
    return field;
}

std::vector<HilbertVec> measure_derivative_field_richardson(const CylindricalFunctional& phi, double t,
                                                            const MeasureView& mu, double eps) {
    auto coarse = measure_derivative_field(phi, t, mu, eps);
    auto fine = measure_derivative_field(phi, t, mu, 0.5 * eps);
    for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = 2.0 * fine[i] - coarse[i];
    return coarse;
}

std::vector<HilbertVec> analytic_measure_field(const CylindricalFunctional& phi, double t, const MeasureView& mu) {
    require_derivatives(phi, "analytic_measure_field");
    if (!phi.dmu) throw UnsupportedFunctional("functional '" + phi.tag + "' has no analytic measure derivative");
    const PathField field = phi.dmu(t, mu);
    std::vector<HilbertVec> out(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) out[i] = field(mu.atom(i));
    return out;
}

SecondDerivative second_derivative(const CylindricalFunctional& phi, double t, const MeasureView& mu, std::size_t i,
                                   double eps, double inner_eps) {
    require_derivatives(phi, "second_derivative");
    if (i >= mu.size()) throw ConfigError("second_derivative: atom index out of range");
    if (!(mu.weight(i) > 0.0)) throw DomainError("second_derivative: atom has zero weight");
    if (!(eps > 0.0) || !(inner_eps > 0.0)) throw ConfigError("second_derivative: eps must be > 0");
    const std::size_t d = mu.dim();
    const std::size_t node = node_of(mu, t);
    const PathGrid base = mu.atom(i).materialize();

    SecondDerivative out{DenseMatrix(d, d), DenseMatrix(d, d)};
    std::vector<PathGrid> bumped(d);
    for (std::size_t k = 0; k < d; ++k) bumped[k] = bump_at_node(base, node, eps * HilbertVec::basis(d, k));

    parallel_for(d, [&](std::size_t k) {
        std::vector<PathView> atoms(mu.atoms().begin(), mu.atoms().end());
        std::vector<double> weights(mu.weights().begin(), mu.weights().end());
        weights[i] *= 0.5;
        atoms.push_back(bumped[k].view());
        weights.push_back(weights[i]);
        // MeasureView checks the weights sum to one; halving and duplicating preserves that up to rounding.
        const MeasureView split(std::move(atoms), std::move(weights));
        const std::size_t b = split.size() - 1;
        for (std::size_t l = 0; l < d; ++l) {
            const HilbertVec dir = HilbertVec::basis(d, l);
            const double at_b = measure_derivative_discrete(phi, t, split, b, dir, inner_eps);
            const double at_a = measure_derivative_discrete(phi, t, split, i, dir, inner_eps);
            out.matrix(l, k) = (at_b - at_a) / eps;
        }
    });
    out.symmetrized = out.matrix.symmetrized();
    return out;
}

ConsistencyReport consistency_check(const CylindricalFunctional& a, const CylindricalFunctional& b,
                                    const std::vector<ConsistencySample>& samples, double tolerance) {
    ConsistencyReport rep;
    auto witness = [&](const std::string& what, double t, double gap) {
        std::ostringstream os;
        os << what << " differs by " << gap << " at t = " << t;
        rep.witnesses.push_back(os.str());
    };
    for (const auto& s : samples) {
        const MeasureView& mu = *s.mu;
        const double ea = a.eval(s.t, mu);
        const double eb = b.eval(s.t, mu);
        const double eval_gap = std::abs(ea - eb);
        rep.max_eval_gap = std::max(rep.max_eval_gap, eval_gap);
        if (eval_gap > 1e-12 * (1.0 + std::abs(ea))) {
            rep.pass = false;
            witness("eval", s.t, eval_gap);
            continue;
        }
        const double dt_gap = std::abs(horizontal_derivative(a, s.t, mu, mu.grid().dt()).value -
                                       horizontal_derivative(b, s.t, mu, mu.grid().dt()).value);
        rep.max_dt_gap = std::max(rep.max_dt_gap, dt_gap);
        if (dt_gap > tolerance) {
            rep.pass = false;
            witness("horizontal derivative", s.t, dt_gap);
        }
        const auto fa = measure_derivative_field(a, s.t, mu);
        const auto fb = measure_derivative_field(b, s.t, mu);
        double dmu_gap = 0.0;
        for (std::size_t i = 0; i < fa.size(); ++i) dmu_gap = std::max(dmu_gap, (fa[i] - fb[i]).norm());
        rep.max_dmu_gap = std::max(rep.max_dmu_gap, dmu_gap);
        if (dmu_gap > tolerance) {
            rep.pass = false;
            witness("measure derivative", s.t, dmu_gap);
        }
        const double second_gap =
            second_derivative(a, s.t, mu, 0).symmetrized.max_abs_diff(second_derivative(b, s.t, mu, 0).symmetrized);
        rep.max_second_gap = std::max(rep.max_second_gap, second_gap);
        if (second_gap > tolerance) {
            rep.pass = false;
            witness("symmetrized second derivative", s.t, second_gap);
        }
    }
    return rep;
}

// ---------------------------------------------------------------- Itô verifier

std::vector<ItoReport> ito_verify(const std::vector<CylindricalFunctional>& functionals, const ModelSpec& model,
                                  const InitialLaw& init, double t, double s, const ItoOptions& opts) {
    for (const auto& phi : functionals) {
        if (phi.derivative_singular || !phi.has_analytic_derivatives()) {
            throw UnsupportedFunctional("ito_verify: functional '" + phi.tag + "' lacks analytic derivatives");
        }
    }
    const TimeGrid& g = model.grid;
    const std::size_t t_node = g.snap(t);
    const std::size_t s_node = g.snap(s);
    if (s_node < t_node) throw DomainError("ito_verify: s must not precede t");
    if (opts.batches < 2 || opts.particles < 2 * opts.batches) throw ConfigError("ito_verify: too few particles per batch");

    IntegrationOptions io;
    io.particles = opts.particles;
    io.seed = opts.seed;
    io.end_node = s_node;
    const ParticleEnsemble e = integrate(model, init, ControlPolicy(), g.time(t_node), io);
    const std::size_t N = e.size();
    const std::size_t B = opts.batches;
    const std::size_t d = model.space.d;
    const std::size_t nd = model.noise_dim();
    const double dt = g.dt();

    std::vector<std::size_t> batch_begin(B + 1);
    for (std::size_t b = 0; b <= B; ++b) batch_begin[b] = b * N / B;
    auto batch_law = [&](std::size_t b, std::size_t node) {
        std::vector<PathView> views;
        for (std::size_t i = batch_begin[b]; i < batch_begin[b + 1]; ++i) views.push_back(e.particles[i].view().stopped(node));
        return MeasureView(std::move(views));
    };

    const std::size_t F = functionals.size();
    std::vector<std::vector<double>> rhs_full(F), rhs_batch(F * B);
    std::vector<double> drift(N * d), sig(N * nd), xt(N * d);

    replay_steps(e, t_node, s_node, [&](const StepContext& ctx) {
        const std::size_t j = ctx.node;
        parallel_for(N, [&](std::size_t i) {
            const PathView x = e.particles[i].view().stopped(j);
            const ControlAction u = e.control_action(i, j);
            model.drift(ctx, x, u, std::span<double>(drift.data() + i * d, d));
            model.diffusion(ctx, x, u, std::span<double>(sig.data() + i * nd, nd));
            const auto v = x.at(j);
            std::copy(v.begin(), v.end(), xt.begin() + static_cast<std::ptrdiff_t>(i * d));
        });
        // per-particle integrand given the derivative fields of one law
        auto integrand = [&](const PathField& grad, const MatrixField& hess, std::size_t i, const PathView& x) {
            const HilbertVec gx = grad(x);
            const HilbertVec agx = adjoint_apply(model.A, gx);
            double v = 0.0;
            for (std::size_t k = 0; k < d; ++k) v += drift[i * d + k] * gx[k] + xt[i * d + k] * agx[k];
            const DenseMatrix hx = hess(x);
            double tr = 0.0;
            for (std::size_t k = 0; k < nd; ++k) tr += sig[i * nd + k] * sig[i * nd + k] * hx(k, k);
            return v + 0.5 * tr;
        };
        for (std::size_t f = 0; f < F; ++f) {
            const auto& phi = functionals[f];
            {
                const MeasureView& law = *ctx.law;
                const PathField grad = phi.dmu(ctx.t, law);
                const MatrixField hess = phi.dxdmu(ctx.t, law);
                std::vector<double> terms(N);
                parallel_for(N, [&](std::size_t i) { terms[i] = integrand(grad, hess, i, law.atom(i)) / static_cast<double>(N); });
                rhs_full[f].push_back(dt * (phi.dt(ctx.t, law) + pairwise_sum(terms.data(), N)));
            }
            for (std::size_t b = 0; b < B; ++b) {
                const MeasureView law = batch_law(b, j);
                const PathField grad = phi.dmu(ctx.t, law);
                const MatrixField hess = phi.dxdmu(ctx.t, law);
                const std::size_t n = law.size();
                std::vector<double> terms(n);
                for (std::size_t r = 0; r < n; ++r) {
                    const std::size_t i = batch_begin[b] + r;
                    terms[r] = integrand(grad, hess, i, law.atom(r)) / static_cast<double>(n);
                }
                rhs_batch[f * B + b].push_back(dt * (phi.dt(ctx.t, law) + pairwise_sum(terms.data(), n)));
            }
        }
    });

    std::vector<ItoReport> reports;
    const MeasureView law_t = e.law_at(t_node);
    const MeasureView law_s = e.law_at(s_node);
    for (std::size_t f = 0; f < F; ++f) {
        const auto& phi = functionals[f];
        ItoReport r;
        r.functional = phi.tag;
        r.model = model.tag;
        r.lhs = phi.eval(g.time(s_node), law_s) - phi.eval(g.time(t_node), law_t);
        r.rhs = pairwise_sum(rhs_full[f].data(), rhs_full[f].size());
        r.residual = r.lhs - r.rhs;
        std::vector<double> batch_residual(B);
        for (std::size_t b = 0; b < B; ++b) {
            const double lhs_b = phi.eval(g.time(s_node), batch_law(b, s_node)) - phi.eval(g.time(t_node), batch_law(b, t_node));
            const auto& acc = rhs_batch[f * B + b];
            batch_residual[b] = lhs_b - pairwise_sum(acc.data(), acc.size());
        }
        const MeanEstimate be = mean_with_stderr(batch_residual);
        r.stderr_mc = be.standard_error;
        r.tolerance = 3.0 * r.stderr_mc + opts.discretization_factor * dt;
        r.pass = std::isfinite(r.residual) && std::abs(r.residual) <= r.tolerance;
        reports.push_back(r);
    }
    return reports;
}

std::vector<ModelSpec> ito_models(std::size_t d, double T, std::size_t M) {
    ModelSpec base;
    base.space = SpaceSpec{d, d};
    base.grid = TimeGrid(T, M);
    base.A = SpectralOperator::generator(std::vector<double>(d, 0.0));
    const double s0 = 0.5;
    auto constant_sigma = [](double level) -> DiffusionFn {
        return [level](const StepContext&, const PathView&, const ControlAction&, std::span<double> out) {
            std::fill(out.begin(), out.end(), level);
        };
    };
    auto drift_const = [d](double scale) -> DriftFn {
        return [d, scale](const StepContext&, const PathView&, const ControlAction&, std::span<double> out) {
            for (std::size_t k = 0; k < d; ++k) out[k] = scale * (k % 2 == 0 ? 1.0 : -0.5);
        };
    };
    const double sigma_hs = s0 * std::sqrt(static_cast<double>(d));

    std::vector<ModelSpec> out;
    ModelSpec zero = base;
    zero.tag = "zero";
    zero.drift = drift_const(0.0);
    zero.diffusion = constant_sigma(0.0);
    zero.lipschitz = 0.0;
    out.push_back(zero);

    ModelSpec cdrift = base;
    cdrift.tag = "const_drift";
    cdrift.drift = drift_const(1.0);
    cdrift.diffusion = constant_sigma(0.0);
    cdrift.lipschitz = std::sqrt(static_cast<double>(d - d / 2) + 0.25 * static_cast<double>(d / 2));
    out.push_back(cdrift);

    ModelSpec brownian = base;
    brownian.tag = "brownian";
    brownian.drift = drift_const(0.0);
    brownian.diffusion = constant_sigma(s0);
    brownian.lipschitz = sigma_hs;
    out.push_back(brownian);

    ModelSpec ou = base;
    ou.tag = "ou_like";
    ou.drift = [](const StepContext& ctx, const PathView& x, const ControlAction&, std::span<double> o) {
        const auto v = x.at(ctx.node);
        for (std::size_t k = 0; k < o.size(); ++k) o[k] = -v[k];
    };
    ou.diffusion = constant_sigma(s0);
    ou.lipschitz = std::max(1.0, sigma_hs);
    out.push_back(ou);

    ModelSpec mf = base;
    mf.tag = "mean_field";
    mf.drift = [](const StepContext& ctx, const PathView& x, const ControlAction&, std::span<double> o) {
        const auto v = x.at(ctx.node);
        for (std::size_t k = 0; k < o.size(); ++k) o[k] = ctx.summary->mean[k] - v[k];
    };
    mf.diffusion = constant_sigma(s0);
    mf.lipschitz = std::max(1.0, sigma_hs);
    out.push_back(mf);
    return out;
}

} // namespace pathmkv
