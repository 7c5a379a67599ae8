#include "pathmkv/hjb.hpp"

#include "pathmkv/errors.hpp"
#include "pathmkv/models.hpp"
#include "pathmkv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace pathmkv {

HamiltonianIntegrand HamiltonianIntegrand::law_free(std::function<double(const PathView&, const ControlAction&)> f,
                                                    std::string tag) {
    HamiltonianIntegrand h;
    h.tag = std::move(tag);
    h.F = [f = std::move(f)](const PathView& x, const ControlAction& u, const EmpiricalControlMeasure&) {
        return f(x, u);
    };
    return h;
}

std::string to_string(HamiltonianForm f) {
    switch (f) {
    case HamiltonianForm::bruteforce: return "bruteforce";
    case HamiltonianForm::maps: return "maps";
    case HamiltonianForm::esssup: return "esssup";
    }
    return "unknown";
}

HamiltonianForm hamiltonian_form_from_string(const std::string& s) {
    if (s == "bruteforce") return HamiltonianForm::bruteforce;
    if (s == "maps") return HamiltonianForm::maps;
    if (s == "esssup") return HamiltonianForm::esssup;
    throw ConfigError("unknown Hamiltonian form '" + s + "' (expected bruteforce, maps or esssup)");
}

RandomizationGrid RandomizationGrid::uniform(std::size_t cells) {
    if (cells == 0) throw ConfigError("randomization grid needs at least one cell");
    return RandomizationGrid{std::vector<double>(cells, 1.0 / static_cast<double>(cells))};
}

namespace {

std::uint64_t checked_power(std::size_t q, std::size_t slots) {
    std::uint64_t n = 1;
    for (std::size_t s = 0; s < slots; ++s) {
        if (n > kHamiltonianEnumerationCap / std::max<std::size_t>(q, 1)) {
            throw CapacityError("Hamiltonian enumeration of " + std::to_string(q) + "^" + std::to_string(slots) +
                                " assignments exceeds the cap of " + std::to_string(kHamiltonianEnumerationCap) +
                                "; use the esssup form");
        }
        n *= q;
    }
    return n;
}

/// Slot s of map index m, with slot 0 the most significant digit so that index
/// order is lexicographic order.
void decode(std::uint64_t m, std::size_t q, std::vector<std::size_t>& digits) {
    for (std::size_t s = digits.size(); s-- > 0;) {
        digits[s] = static_cast<std::size_t>(m % q);
        m /= q;
    }
}

/// Enumerates every map (atom, cell) -> U. Cell masses multiply the atom weights;
/// each atom's cell terms are summed pairwise before the atoms are added in order.
HamiltonianResult enumerate(const HamiltonianIntegrand& F, const MeasureView& mu, const ActionSet& U,
                            const std::vector<double>& cells) {
    const std::size_t k = mu.size();
    const std::size_t q = U.size();
    const std::size_t R = cells.size();
    const std::size_t slots = k * R;
    const std::uint64_t total = checked_power(q, slots);
    const auto& actions = U.elements();

    // nu-free integrands are tabulated once
    std::vector<double> table;
    if (!F.depends_on_law) {
        table.resize(k * q);
        const EmpiricalControlMeasure none;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t u = 0; u < q; ++u) table[i * q + u] = F.F(mu.atom(i), actions[u], none);
    }

    auto score = [&](const std::vector<std::size_t>& a) {
        EmpiricalControlMeasure nu;
        if (F.depends_on_law) {
            std::vector<ControlAction> atoms;
            std::vector<double> w;
            atoms.reserve(slots);
            w.reserve(slots);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t c = 0; c < R; ++c) {
                    atoms.push_back(actions[a[i * R + c]]);
                    w.push_back(mu.weight(i) * cells[c]);
                }
            nu = EmpiricalControlMeasure(std::move(atoms), std::move(w));
        }
        std::vector<double> terms(R);
        double total_value = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t c = 0; c < R; ++c) {
                const std::size_t u = a[i * R + c];
                const double f = F.depends_on_law ? F.F(mu.atom(i), actions[u], nu) : table[i * q + u];
                terms[c] = (mu.weight(i) * cells[c]) * f;
            }
            total_value += R == 1 ? terms[0] : pairwise_sum(terms.data(), R);
        }
        return total_value;
    };

    // contiguous chunks, first strict maximum within a chunk, chunks reduced in order
    const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(total, 4 * thread_count()));
    std::vector<double> best(chunks, -std::numeric_limits<double>::infinity());
    std::vector<std::uint64_t> best_index(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
        const std::uint64_t lo = total * c / chunks;
        const std::uint64_t hi = total * (c + 1) / chunks;
        std::vector<std::size_t> digits(slots);
        for (std::uint64_t m = lo; m < hi; ++m) {
            decode(m, q, digits);
            const double v = score(digits);
            if (std::isnan(v)) throw DomainError("Hamiltonian integrand returned NaN");
            if (m == lo || v > best[c]) {
                best[c] = v;
                best_index[c] = m;
            }
        }
    });
    std::size_t winner = 0;
    for (std::size_t c = 1; c < chunks; ++c)
        if (best[c] > best[winner]) winner = c;
    HamiltonianResult out;
    out.value = best[winner];
    out.argmax.resize(slots);
    decode(best_index[winner], q, out.argmax);
    out.evaluated = total;
    return out;
}

void check_inputs(const MeasureView& mu, const ActionSet& U, const char* who) {
    if (!U.is_finite()) throw ConfigError(std::string(who) + ": U must be finite");
    if (U.size() == 0) throw ConfigError(std::string(who) + ": U is empty");
    if (mu.size() == 0) throw ConfigError(std::string(who) + ": mu has no atoms");
}

} // namespace

HamiltonianResult hamiltonian_sup_finite(const HamiltonianIntegrand& F, const MeasureView& mu, const ActionSet& U,
                                         HamiltonianForm form) {
    check_inputs(mu, U, "hamiltonian_sup_finite");
    if (!F.F) throw ContractError("hamiltonian_sup_finite: integrand is empty");
    if (form != HamiltonianForm::bruteforce && F.depends_on_law) {
        throw ConfigError("hamiltonian_sup_finite: the " + to_string(form) +
                          " form needs an integrand that ignores the control law");
    }
    switch (form) {
    case HamiltonianForm::bruteforce: return enumerate(F, mu, U, {0.5, 0.5});
    case HamiltonianForm::maps: return enumerate(F, mu, U, {1.0});
    case HamiltonianForm::esssup: break;
    }
    const EmpiricalControlMeasure none;
    const auto& actions = U.elements();
    HamiltonianResult out;
    out.argmax.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double best = 0.0;
        for (std::size_t u = 0; u < actions.size(); ++u) {
            const double v = F.F(mu.atom(i), actions[u], none);
            if (std::isnan(v)) throw DomainError("Hamiltonian integrand returned NaN");
            if (u == 0 || v > best) {
                best = v;
                out.argmax[i] = u;
            }
        }
        out.value += mu.weight(i) * best;
    }
    out.evaluated = mu.size() * actions.size();
    return out;
}

HamiltonianResult hamiltonian_sup_randomized(const HamiltonianIntegrand& F, const MeasureView& mu, const ActionSet& U,
                                             const RandomizationGrid& grid) {
    check_inputs(mu, U, "hamiltonian_sup_randomized");
    if (!F.F) throw ContractError("hamiltonian_sup_randomized: integrand is empty");
    if (grid.weights.empty()) throw ConfigError("hamiltonian_sup_randomized: empty randomization grid");
    double s = 0.0;
    for (double w : grid.weights) {
        if (!(w > 0.0)) throw ConfigError("hamiltonian_sup_randomized: cell masses must be positive");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError("hamiltonian_sup_randomized: cell masses must sum to 1");
    return enumerate(F, mu, U, grid.weights);
}

HamiltonianIntegrand w2_penalty_integrand(const ActionSet& U) {
    if (!U.is_finite()) throw ConfigError("w2_penalty_integrand: U must be finite");
    const EmpiricalControlMeasure uniform = EmpiricalControlMeasure::uniform(U.elements());
    HamiltonianIntegrand h;
    h.tag = "w2_penalty";
    h.depends_on_law = true;
    h.F = [uniform](const PathView&, const ControlAction&, const EmpiricalControlMeasure& nu) {
        return -control_wasserstein2(nu, uniform);
    };
    return h;
}

HamiltonianIntegrand model_integrand(const ModelSpec& model, double t, const MeasureView& mu, const PathField& dmu,
                                     const MatrixField& dxdmu) {
    const std::size_t node = model.grid.snap(t);
    const std::size_t d = model.space.d;
    const std::size_t nd = model.noise_dim();
    // the captured view and summary must outlive the integrand
    auto law = std::make_shared<MeasureView>(mu.stopped(node));
    auto summary = std::make_shared<LawSummary>(summarize(*law, node));
    HamiltonianIntegrand h;
    h.tag = "model:" + model.tag;
    h.F = [&model, node, d, nd, law, summary, dmu, dxdmu](const PathView& x, const ControlAction& u,
                                                         const EmpiricalControlMeasure&) {
        StepContext ctx;
        ctx.t = model.grid.time(node);
        ctx.node = node;
        ctx.law = law.get();
        ctx.summary = summary.get();
        const PathView xs = x.stopped(node);
        double value = model.running_cost ? model.running_cost(ctx, xs, u) : 0.0;
        const HilbertVec p = dmu(xs);
        std::vector<double> b(d, 0.0);
        if (model.drift) model.drift(ctx, xs, u, b);
        for (std::size_t k = 0; k < d; ++k) value += b[k] * p[k];
        std::vector<double> s(nd, 0.0);
        if (model.diffusion) model.diffusion(ctx, xs, u, s);
        const DenseMatrix D = dxdmu(xs).symmetrized();
        double tr = 0.0;
        for (std::size_t k = 0; k < nd; ++k) tr += s[k] * s[k] * D(k, k);
        return value + 0.5 * tr;
    };
    return h;
}

double investment_objective(const InvestmentParams& ip, const HilbertVec& u) {
    const double disc = std::exp(-ip.rate * ip.t);
    const HilbertVec Cu = ip.C.apply(u);
    const HilbertVec Mu = ip.M.apply(u);
    return inner(Cu, ip.p) - disc * (inner(ip.a2, u) + inner(Mu, u));
}

namespace {

void validate_investment(const InvestmentParams& ip) {
    const std::size_t d = ip.p.size();
    if (ip.a2.size() != d || ip.C.dim() != d || ip.M.dim() != d || ip.lower.size() != d || ip.upper.size() != d) {
        throw ConfigError("investment Hamiltonian: dimension mismatch");
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (!(ip.M.eigenvalue(k) > 0.0)) throw DomainError("investment Hamiltonian: M must have positive eigenvalues");
        if (!(ip.lower[k] <= ip.upper[k])) throw ConfigError("investment Hamiltonian: empty box");
    }
}

} // namespace

InvestmentResult investment_hamiltonian_closed_form(const InvestmentParams& ip) {
    validate_investment(ip);
    const std::size_t d = ip.p.size();
    const double grow = std::exp(ip.rate * ip.t);
    const HilbertVec Cstar_p = adjoint_apply(ip.C, ip.p);
    InvestmentResult out;
    out.u_star = HilbertVec(d);
    bool clipped = false;
    for (std::size_t k = 0; k < d; ++k) {
        const double free = 0.5 * (grow * Cstar_p[k] - ip.a2[k]) / ip.M.eigenvalue(k);
        const double u = std::clamp(free, ip.lower[k], ip.upper[k]);
        clipped = clipped || u != free;
        out.u_star[k] = u;
    }
    out.value = investment_objective(ip, out.u_star);
    if (!clipped) out.unconstrained_value = std::exp(-ip.rate * ip.t) * inner(ip.M.apply(out.u_star), out.u_star);
    return out;
}

InvestmentResult investment_grid_search(const InvestmentParams& ip, std::size_t points) {
    validate_investment(ip);
    if (points < 2) throw ConfigError("investment_grid_search: needs at least 2 points per coordinate");
    const std::size_t d = ip.p.size();
    std::uint64_t total = 1;
    for (std::size_t k = 0; k < d; ++k) {
        if (total > 50000000ULL / points) throw CapacityError("investment_grid_search: grid too large");
        total *= points;
    }
    InvestmentResult out;
    out.value = -std::numeric_limits<double>::infinity();
    HilbertVec u(d);
    for (std::uint64_t m = 0; m < total; ++m) {
        std::uint64_t r = m;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t j = static_cast<std::size_t>(r % points);
            r /= points;
            const double h = (ip.upper[k] - ip.lower[k]) / static_cast<double>(points - 1);
            u[k] = j + 1 == points ? ip.upper[k] : ip.lower[k] + static_cast<double>(j) * h;
        }
        const double v = investment_objective(ip, u);
        if (v > out.value) {
            out.value = v;
            out.u_star = u;
        }
    }
    return out;
}

double investment_grid_bound(const InvestmentParams& ip, std::size_t points) {
    validate_investment(ip);
    double bound = 0.0;
    for (std::size_t k = 0; k < ip.p.size(); ++k) {
        const double h = (ip.upper[k] - ip.lower[k]) / static_cast<double>(points - 1);
        bound += ip.M.eigenvalue(k) * 0.25 * h * h;
    }
    return std::exp(-ip.rate * ip.t) * bound;
}

InvestmentResult investment_projected_gradient(const InvestmentParams& ip, double tol, std::size_t max_iter) {
    validate_investment(ip);
    const std::size_t d = ip.p.size();
    const double disc = std::exp(-ip.rate * ip.t);
    double curvature = 0.0;
    for (std::size_t k = 0; k < d; ++k) curvature = std::max(curvature, 2.0 * disc * ip.M.eigenvalue(k));
    const double step = 1.0 / curvature;
    const HilbertVec Cstar_p = adjoint_apply(ip.C, ip.p);
    HilbertVec u(d);
    for (std::size_t k = 0; k < d; ++k) u[k] = std::clamp(0.0, ip.lower[k], ip.upper[k]);
    for (std::size_t it = 0; it < max_iter; ++it) {
        const HilbertVec Mu = ip.M.apply(u);
        double change = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double grad = Cstar_p[k] - disc * (ip.a2[k] + 2.0 * Mu[k]);
            const double next = std::clamp(u[k] + step * grad, ip.lower[k], ip.upper[k]);
            change = std::max(change, std::abs(next - u[k]));
            u[k] = next;
        }
        if (change <= tol * (1.0 + u.norm())) break;
    }
    InvestmentResult out;
    out.u_star = u;
    out.value = investment_objective(ip, u);
    return out;
}

HjbResidual hjb_residual(const CandidateSolution& w, const ModelSpec& model, double t, const MeasureView& mu,
                         HamiltonianForm form) {
    if (!w.w.eval || !w.w.has_analytic_derivatives()) {
        throw ContractError("hjb_residual: candidate '" + w.w.tag + "' lacks an analytic derivative field");
    }
    if (!model.actions.is_finite()) throw ConfigError("hjb_residual: U must be finite");
    const TimeGrid& g = model.grid;
    const std::size_t node = g.snap(t);
    const double tn = g.time(node);
    const MeasureView law = mu.stopped(node);

    HjbResidual out;
    out.dt = w.w.dt(tn, law);
    const PathField dmu = w.w.dmu(tn, law);
    const MatrixField dxdmu = w.w.dxdmu(tn, law);
    const PathField a_star = w.a_star_dmu ? w.a_star_dmu(tn, law)
                                          : PathField([&model, dmu](const PathView& x) {
                                                return adjoint_apply(model.A, dmu(x));
                                            });
    std::vector<double> terms(law.size());
    for (std::size_t i = 0; i < law.size(); ++i) {
        const PathView x = law.atom(i);
        const HilbertVec v = a_star(x);
        const HilbertVec xt(x.at(node));
        if (!std::isfinite(v.norm())) throw ContractError("hjb_residual: A* derivative field is not finite");
        terms[i] = law.weight(i) * inner(xt, v);
    }
    out.a_star_term = pairwise_sum(terms.data(), terms.size());
    const HamiltonianResult H = hamiltonian_sup_finite(model_integrand(model, tn, law, dmu, dxdmu), law, model.actions, form);
    out.hamiltonian = H.value;
    out.argmax = H.argmax;
    out.residual = out.dt + out.a_star_term + out.hamiltonian;

    // terminal condition on the full measure
    const std::size_t M = g.steps();
    const double wT = w.w.eval(g.time(M), mu);
    double eg = 0.0;
    if (model.terminal_cost) {
        const LawSummary summary = summarize(mu, M);
        for (std::size_t i = 0; i < mu.size(); ++i) terms[i] = mu.weight(i) * model.terminal_cost(mu.atom(i), mu, summary);
        eg = pairwise_sum(terms.data(), mu.size());
    }
    out.terminal_gap = std::abs(wT - eg);
    return out;
}

namespace candidates {

CandidateSolution affine(HilbertVec h, std::function<double(double)> k, std::function<double(double)> k_prime,
                         std::function<double(double)> c, std::function<double(double)> c_prime, std::string tag) {
    const CylindricalFunctional lin = zoo::time_weighted_linear(std::move(h), k, k_prime, tag);
    CandidateSolution out;
    out.w = lin;
    out.w.eval = [lin, c](double t, const MeasureView& mu) { return lin.eval(t, mu) + c(t); };
    out.w.dt = [lin, c_prime](double t, const MeasureView& mu) { return lin.dt(t, mu) + c_prime(t); };
    return out;
}

CandidateSolution ou_linear_reward_value(std::size_t d, double lambda, double T) {
    if (lambda == 0.0) throw DomainError("ou_linear_reward_value: lambda must be nonzero");
    auto e = [lambda, T](double t) { return std::exp(lambda * (T - t)); };
    return affine(
        HilbertVec::basis(d, 0), [e, lambda](double t) { return (e(t) - 1.0) / lambda + e(t); },
        [e, lambda](double t) { return -e(t) - lambda * e(t); }, [](double) { return 0.0; },
        [](double) { return 0.0; }, "ou_linear_reward");
}

CandidateSolution controlled_linear_value(std::size_t d, double lambda, double T) {
    if (lambda == 0.0) throw DomainError("controlled_linear_value: lambda must be nonzero");
    auto e = [lambda, T](double t) { return std::exp(lambda * (T - t)); };
    return affine(
        HilbertVec::basis(d, 0), e, [e, lambda](double t) { return -lambda * e(t); },
        [e, lambda](double t) { return (e(t) - 1.0) / lambda; }, [e](double t) { return -e(t); },
        "controlled_linear");
}

CandidateSolution constant(double c, std::size_t d) {
    CandidateSolution out;
    out.w = zoo::constant(c, d);
    return out;
}

CandidateSolution by_tag(const std::string& tag, std::size_t d, double lambda, double T) {
    const bool doubled = tag.size() > 3 && tag.compare(tag.size() - 3, 3, "_x2") == 0;
    const std::string base = doubled ? tag.substr(0, tag.size() - 3) : tag;
    CandidateSolution c;
    if (base == "ou_linear_reward") {
        c = ou_linear_reward_value(d, lambda, T);
    } else if (base == "controlled_linear") {
        c = controlled_linear_value(d, lambda, T);
    } else if (base == "constant") {
        c = constant(0.0, d);
    } else {
        throw ConfigError("unknown candidate solution '" + tag +
                          "' (expected ou_linear_reward, controlled_linear or constant, optionally with _x2)");
    }
    if (doubled) {
        c.w = zoo::scaled(c.w, 2.0);
        c.w.tag = tag;
    }
    return c;
}

} // namespace candidates

ModelSpec ou_linear_reward_model(double T, std::size_t M, std::size_t d, double lambda, double sigma) {
    ModelParams p;
    p.T = T;
    p.M = M;
    p.d = d;
    p.dK = d;
    p.lambda = lambda;
    p.sigma = sigma;
    ModelSpec m = ou_model(p);
    m.tag = "ou_linear_reward";
    m.running_cost = [](const StepContext& ctx, const PathView& x, const ControlAction&) { return x.at(ctx.node)[0]; };
    m.terminal_cost = [](const PathView& x, const MeasureView&, const LawSummary&) {
        return x.at(x.grid().steps())[0];
    };
    m.cost_growth = [](double) { return 1.0; };
    return m;
}

} // namespace pathmkv
