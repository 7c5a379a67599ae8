#include "pathmkv/model.hpp"

#include "pathmkv/errors.hpp"
#include "pathmkv/noise.hpp"
#include "pathmkv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace pathmkv {

LawSummary summarize(const MeasureView& mu, std::size_t node, const EmpiricalControlMeasure* controls) {
    LawSummary s;
    s.node = node;
    s.mean = mean_at_node(mu, node);
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double r = mu.atom(i).sup_norm_until(node);
        terms[i] = mu.weight(i) * r * r;
    }
    s.second_moment = pairwise_sum(terms.data(), terms.size());
    if (controls != nullptr) s.control_mean = controls->mean();
    return s;
}

// ---------------------------------------------------------------- ActionSet

ActionSet ActionSet::finite(std::vector<ControlAction> elements) {
    if (elements.empty()) throw ConfigError("action set: finite U needs at least one element");
    ActionSet a;
    a.finite_ = true;
    a.dim_ = elements.front().u.size();
    if (a.dim_ == 0) throw ConfigError("action set: controls must have dimension >= 1");
    for (const auto& e : elements) {
        if (e.u.size() != a.dim_) throw ConfigError("action set: elements of different dimension");
        for (double v : e.u)
            if (!std::isfinite(v)) throw ConfigError("action set: non-finite element");
    }
    a.elements_ = std::move(elements);
    a.lower_.clear();
    a.upper_.clear();
    return a;
}

ActionSet ActionSet::box(std::vector<double> lower, std::vector<double> upper) {
    if (lower.empty() || lower.size() != upper.size()) throw ConfigError("action set: box bounds of unequal length");
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (std::isnan(lower[k]) || std::isnan(upper[k]) || lower[k] > upper[k]) {
            throw ConfigError("action set: box needs lower <= upper in every coordinate");
        }
    }
    ActionSet a;
    a.finite_ = false;
    a.dim_ = lower.size();
    a.elements_.clear();
    a.lower_ = std::move(lower);
    a.upper_ = std::move(upper);
    return a;
}

ActionSet ActionSet::singleton() { return ActionSet(); }

bool ActionSet::is_bounded() const {
    if (finite_) return true;
    for (std::size_t k = 0; k < dim_; ++k)
        if (!std::isfinite(lower_[k]) || !std::isfinite(upper_[k])) return false;
    return true;
}

bool ActionSet::contains(const ControlAction& u) const {
    if (u.u.size() != dim_) return false;
    if (finite_) return std::find(elements_.begin(), elements_.end(), u) != elements_.end();
    for (std::size_t k = 0; k < dim_; ++k) {
        if (!(u.u[k] >= lower_[k] && u.u[k] <= upper_[k])) return false;
    }
    return true;
}

std::vector<ControlAction> ActionSet::probe_points() const {
    if (finite_) return elements_;
    std::vector<double> lo(dim_), hi(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
        lo[k] = std::isfinite(lower_[k]) ? lower_[k] : -1.0;
        hi[k] = std::isfinite(upper_[k]) ? upper_[k] : 1.0;
        if (!std::isfinite(lower_[k]) && std::isfinite(upper_[k])) lo[k] = upper_[k] - 2.0;
        if (std::isfinite(lower_[k]) && !std::isfinite(upper_[k])) hi[k] = lower_[k] + 2.0;
    }
    std::vector<ControlAction> pts;
    const std::size_t corners = dim_ <= 10 ? (std::size_t{1} << dim_) : 0;
    for (std::size_t mask = 0; mask < corners; ++mask) {
        ControlAction c{std::vector<double>(dim_)};
        for (std::size_t k = 0; k < dim_; ++k) c.u[k] = (mask >> k) & 1U ? hi[k] : lo[k];
        pts.push_back(std::move(c));
    }
    ControlAction centre{std::vector<double>(dim_)};
    for (std::size_t k = 0; k < dim_; ++k) centre.u[k] = 0.5 * (lo[k] + hi[k]);
    pts.push_back(std::move(centre));
    return pts;
}

// ---------------------------------------------------------------- ControlPolicy

ControlPolicy::ControlPolicy() : tag_("constant(0)"), open_([](double) { return ControlAction{{0.0}}; }) {}

ControlPolicy ControlPolicy::constant(ControlAction u, std::string tag) {
    if (tag.empty()) {
        std::ostringstream os;
        os << "constant(";
        for (std::size_t k = 0; k < u.u.size(); ++k) os << (k ? "," : "") << u.u[k];
        os << ")";
        tag = os.str();
    }
    return open_loop([u](double) { return u; }, std::move(tag));
}

ControlPolicy ControlPolicy::open_loop(OpenLoopFn fn, std::string tag) {
    if (!fn) throw ConfigError("control policy: empty function");
    ControlPolicy p;
    p.kind_ = Kind::open_loop;
    p.tag_ = std::move(tag);
    p.open_ = std::move(fn);
    return p;
}

ControlPolicy ControlPolicy::feedback(FeedbackFn fn, std::string tag) {
    if (!fn) throw ConfigError("control policy: empty function");
    ControlPolicy p;
    p.kind_ = Kind::feedback;
    p.tag_ = std::move(tag);
    p.open_ = nullptr;
    p.feedback_ = std::move(fn);
    return p;
}

ControlPolicy ControlPolicy::randomized(RandomizedFn fn, std::string tag) {
    if (!fn) throw ConfigError("control policy: empty function");
    ControlPolicy p;
    p.kind_ = Kind::randomized;
    p.tag_ = std::move(tag);
    p.open_ = nullptr;
    p.randomized_ = std::move(fn);
    return p;
}

ControlAction ControlPolicy::act(const StepContext& ctx, const PathView& x, double r) const {
    switch (kind_) {
    case Kind::open_loop: return open_(ctx.t);
    case Kind::feedback: return feedback_(ctx, x);
    case Kind::randomized: return randomized_(ctx.t, x, r);
    }
    throw ContractError("control policy: unknown kind");
}

// ---------------------------------------------------------------- validation

namespace {

PathGrid random_path(const TimeGrid& g, std::size_t d, std::uint64_t seed, std::uint64_t id, double scale) {
    PathGrid x(g, d);
    const double step = scale / std::sqrt(static_cast<double>(g.nodes()));
    for (std::size_t k = 0; k < d; ++k) {
        double v = scale * keyed_normal(seed, Stream::auxiliary, id, 0, k);
        for (std::size_t j = 0; j < g.nodes(); ++j) {
            if (j > 0) v += step * keyed_normal(seed, Stream::auxiliary, id, j, k);
            x.at(j)[k] = v;
        }
    }
    return x;
}

double vec_diff_norm(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

double vec_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

struct Evaluated {
    std::vector<double> b, sigma;
    double f = 0.0;
};

} // namespace

void validate_model(const ModelSpec& model, std::uint64_t seed) {
    const std::string where = "model '" + model.tag + "': ";
    model.space.validate();
    if (model.A.kind() != OperatorKind::generator) throw ConfigError(where + "A must be a generator");
    if (model.A.dim() != model.space.d) throw ConfigError(where + "A has the wrong dimension");
    model.A.validate();
    if (!model.drift || !model.diffusion) throw ConfigError(where + "drift and diffusion are required");
    if (!(model.lipschitz >= 0.0) || !std::isfinite(model.lipschitz)) throw ConfigError(where + "L must be finite and >= 0");
    if (!model.actions.is_bounded() && model.control_growth != ControlGrowth::linear) {
        throw ConfigError(where + "unbounded U requires the linear control-growth declaration");
    }

    const TimeGrid& g = model.grid;
    const std::size_t d = model.space.d;
    const std::size_t nd = model.noise_dim();
    const double L = model.lipschitz;
    const auto probes = model.actions.probe_points();

    auto evaluate = [&](double t, std::size_t node, const MeasureView& mu, const PathView& x, const ControlAction& u) {
        const MeasureView stopped = mu.stopped(node);
        EmpiricalControlMeasure nu = EmpiricalControlMeasure::uniform({u});
        LawSummary s = summarize(stopped, node, &nu);
        StepContext ctx{t, node, &stopped, &s, &nu};
        Evaluated e;
        e.b.assign(d, 0.0);
        e.sigma.assign(nd, 0.0);
        model.drift(ctx, x.stopped(node), u, e.b);
        model.diffusion(ctx, x.stopped(node), u, e.sigma);
        if (model.running_cost) e.f = model.running_cost(ctx, x.stopped(node), u);
        return e;
    };

    // growth at (0, delta_0)
    {
        std::vector<PathGrid> zero{PathGrid(g, d)};
        auto delta0 = EmpiricalPathMeasure::uniform(zero);
        for (std::size_t j = 0; j < g.steps(); j += std::max<std::size_t>(1, g.steps() / 4)) {
            for (const auto& u : probes) {
                auto e = evaluate(g.time(j), j, delta0.view(), delta0.atom(0).view(), u);
                const double size = vec_norm(e.b) + vec_norm(e.sigma);
                const double bound = model.control_growth == ControlGrowth::bounded
                                         ? L
                                         : L * (1.0 + vec_norm(u.u));
                if (size > 1.05 * bound + 1e-12) {
                    throw ConfigError(where + "|b(0,delta_0)| + ||sigma(0,delta_0)|| exceeds the declared L");
                }
            }
        }
    }

    // Lipschitz and non-anticipativity on sampled pairs
    for (std::uint64_t trial = 0; trial < 8; ++trial) {
        const std::size_t node = static_cast<std::size_t>(trial * g.steps() / 8);
        const double t = g.time(node);
        const double scale = 0.5 + static_cast<double>(trial);
        std::vector<PathGrid> a, b;
        for (std::uint64_t i = 0; i < 4; ++i) {
            a.push_back(random_path(g, d, seed, 1000 * trial + i, scale));
            b.push_back(random_path(g, d, seed, 1000 * trial + 500 + i, scale));
        }
        auto mu = EmpiricalPathMeasure::uniform(a);
        auto nu = EmpiricalPathMeasure::uniform(b);
        const PathGrid x = random_path(g, d, seed, 1000 * trial + 900, scale);
        const PathGrid y = random_path(g, d, seed, 1000 * trial + 901, scale);
        const double w2 = wasserstein2(mu.view().stopped(node), nu.view().stopped(node), W2Mode::exact).distance;
        const double dx = sup_seminorm(x - y, t);
        for (const auto& u : probes) {
            auto ex = evaluate(t, node, mu.view(), x.view(), u);
            auto ey = evaluate(t, node, nu.view(), y.view(), u);
            const double bound = 1.05 * L * (dx + w2) + 1e-12;
            if (vec_diff_norm(ex.b, ey.b) > bound) throw ConfigError(where + "drift violates the declared Lipschitz constant");
            if (vec_diff_norm(ex.sigma, ey.sigma) > bound) {
                throw ConfigError(where + "diffusion violates the declared Lipschitz constant");
            }
            // perturbing the path after t must not change anything
            PathGrid xp = x;
            for (std::size_t j = node + 1; j < g.nodes(); ++j)
                for (std::size_t k = 0; k < d; ++k) xp.at(j)[k] += 1.0 + static_cast<double>(j);
            auto ep = evaluate(t, node, mu.view(), xp.view(), u);
            if (ep.b != ex.b || ep.sigma != ex.sigma || !(ep.f == ex.f || (std::isnan(ep.f) && std::isnan(ex.f)))) {
                throw ConfigError(where + "coefficients depend on the path after t");
            }
        }
    }
}

// ---------------------------------------------------------------- a-priori constants

AprioriConstants apriori_constants(double L, double eta, double T) {
    AprioriConstants c;
    const double eta_plus = std::max(eta, 0.0);
    const double e2 = std::exp(2.0 * eta_plus * T);
    // Maximal inequality for stochastic convolutions of a pseudo-contraction semigroup:
    // rescale by e^{-eta t} to a contraction, dilate, then Doob's L^2 inequality.
    c.stochastic_convolution = 4.0 * e2;
    const double K = 3.0 * L * L * e2 * T + 3.0 * L * L * c.stochastic_convolution;
    const double c_xi = 2.0 * (1.0 + e2);
    auto safe_exp = [](double v) { return v > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(v); };
    c.moment = std::sqrt(std::max(3.0 * c_xi, 3.0 * K * T) * safe_exp(6.0 * K * T));
    c.lipschitz_initial = std::sqrt(3.0 * c_xi * safe_exp(12.0 * K * T));
    c.contraction = 2.0 * L * (std::exp(eta_plus * T) + std::sqrt(c.stochastic_convolution));
    if (c.contraction <= 0.0) {
        c.window = T;
    } else {
        // C eps^{1/2} < 1/2 with eps < 1
        c.window = std::min({T, 0.99, 0.99 / (4.0 * c.contraction * c.contraction)});
    }
    return c;
}

AprioriConstants apriori_constants(const ModelSpec& model) {
    return apriori_constants(model.lipschitz, model.A.eta(), model.grid.horizon());
}

// ---------------------------------------------------------------- InitialLaw

InitialLaw InitialLaw::constant(HilbertVec c) {
    return InitialLaw("constant", [c](std::size_t, std::uint64_t, const TimeGrid& g) { return PathGrid::constant(g, c); });
}

InitialLaw InitialLaw::from_paths(std::vector<PathGrid> paths, std::string tag) {
    if (paths.empty()) throw ConfigError("initial law: no paths");
    auto shared = std::make_shared<const std::vector<PathGrid>>(std::move(paths));
    return InitialLaw(std::move(tag), [shared](std::size_t i, std::uint64_t, const TimeGrid& g) {
        const PathGrid& p = (*shared)[i % shared->size()];
        if (!(p.grid() == g)) throw ConfigError("initial law: stored path lives on a different grid");
        return p;
    });
}

InitialLaw InitialLaw::alternating(HilbertVec a, HilbertVec b) {
    if (a.size() != b.size()) throw ConfigError("initial law: atoms of different dimension");
    return InitialLaw("alternating", [a, b](std::size_t i, std::uint64_t, const TimeGrid& g) {
        return PathGrid::constant(g, i % 2 == 0 ? a : b);
    });
}

InitialLaw InitialLaw::gaussian(HilbertVec mean, double sd) {
    if (!(sd >= 0.0)) throw ConfigError("initial law: sd must be >= 0");
    return InitialLaw("gaussian", [mean, sd](std::size_t i, std::uint64_t seed, const TimeGrid& g) {
        HilbertVec v = mean;
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += sd * keyed_normal(seed, Stream::initial, i, k);
        return PathGrid::constant(g, v);
    });
}

PathGrid InitialLaw::sample(std::size_t particle, std::uint64_t seed, const TimeGrid& grid) const {
    if (!sampler_) throw ConfigError("initial law: no sampler");
    PathGrid p = sampler_(particle, seed, grid);
    if (!(p.grid() == grid)) throw ConfigError("initial law '" + tag_ + "' produced a path on the wrong grid");
    return p;
}

InitialLaw InitialLaw::stopped(double t) const {
    auto inner_sampler = sampler_;
    return InitialLaw(tag_ + "|stopped", [inner_sampler, t](std::size_t i, std::uint64_t seed, const TimeGrid& g) {
        return stop(inner_sampler(i, seed, g), t);
    });
}

InitialLaw InitialLaw::shifted(HilbertVec delta) const {
    auto inner_sampler = sampler_;
    return InitialLaw(tag_ + "|shifted", [inner_sampler, delta](std::size_t i, std::uint64_t seed, const TimeGrid& g) {
        PathGrid p = inner_sampler(i, seed, g);
        for (std::size_t j = 0; j < p.nodes(); ++j)
            for (std::size_t k = 0; k < p.dim(); ++k) p.at(j)[k] += delta[k];
        return p;
    });
}

} // namespace pathmkv
