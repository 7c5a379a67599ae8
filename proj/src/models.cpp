#include "pathmkv/models.hpp"

#include "pathmkv/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pathmkv {

namespace {

ModelSpec base(const std::string& tag, const ModelParams& p) {
    if (!(p.T > 0.0)) throw ConfigError("model: T must be > 0");
    if (p.M == 0) throw ConfigError("model: M must be >= 1");
    ModelSpec m;
    m.tag = tag;
    m.space = SpaceSpec{p.d, p.dK};
    m.space.validate();
    m.grid = TimeGrid(p.T, p.M);
    m.A = builtin_generator(p);
    return m;
}

double sigma_hs(const ModelSpec& m, double s0) { return std::abs(s0) * std::sqrt(static_cast<double>(m.noise_dim())); }

DiffusionFn constant_diffusion(double s0) {
    return [s0](const StepContext&, const PathView&, const ControlAction&, std::span<double> out) {
        std::fill(out.begin(), out.end(), s0);
    };
}

DriftFn zero_drift() {
    return [](const StepContext&, const PathView&, const ControlAction&, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
}

DriftFn mean_field_drift(double theta) {
    return [theta](const StepContext& ctx, const PathView& x, const ControlAction&, std::span<double> out) {
        const auto xt = x.at(ctx.node);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = theta * (ctx.summary->mean[k] - xt[k]);
    };
}

double squared(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
}

} // namespace

SpectralOperator builtin_generator(const ModelParams& p) {
    std::vector<double> eig(p.d);
    for (std::size_t k = 0; k < p.d; ++k) eig[k] = p.lambda * static_cast<double>((k + 1) * (k + 1));
    return SpectralOperator::generator(std::move(eig));
}

ModelSpec frozen_model(const ModelParams& p) {
    ModelParams q = p;
    q.lambda = 0.0;
    ModelSpec m = base("frozen", q);
    m.drift = zero_drift();
    m.diffusion = constant_diffusion(0.0);
    m.lipschitz = 0.0;
    return m;
}

ModelSpec ou_model(const ModelParams& p) {
    ModelSpec m = base("ou", p);
    m.drift = zero_drift();
    m.diffusion = constant_diffusion(p.sigma);
    m.lipschitz = sigma_hs(m, p.sigma);
    return m;
}

ModelSpec ou_drift_model(const ModelParams& p) {
    ModelParams q = p;
    q.lambda = 0.0;
    ModelSpec m = base("ou_drift", q);
    const double theta = p.theta;
    m.drift = [theta](const StepContext& ctx, const PathView& x, const ControlAction&, std::span<double> out) {
        const auto xt = x.at(ctx.node);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = -theta * xt[k];
    };
    m.diffusion = constant_diffusion(p.sigma);
    m.lipschitz = std::max(std::abs(theta), sigma_hs(m, p.sigma));
    return m;
}

ModelSpec mean_field_ou_model(const ModelParams& p) {
    ModelSpec m = base("mean_field_ou", p);
    m.drift = mean_field_drift(p.theta);
    m.diffusion = constant_diffusion(p.sigma);
    m.lipschitz = std::max(std::abs(p.theta), sigma_hs(m, p.sigma));
    return m;
}

ModelSpec quadratic_model(const ModelParams& p) {
    ModelSpec m = mean_field_ou_model(p);
    m.tag = "quadratic";
    m.running_cost = [](const StepContext& ctx, const PathView& x, const ControlAction&) {
        return -squared(x.at(ctx.node));
    };
    m.terminal_cost = [](const PathView& x, const MeasureView&, const LawSummary& s) {
        return -squared(x.at(x.grid().steps())) - s.mean.norm_squared();
    };
    m.cost_growth = [](double r) { return 1.0 + r * r; };
    return m;
}

ModelSpec controlled_linear_model(const ModelParams& p) {
    ModelSpec m = base("controlled_linear", p);
    m.actions = ActionSet::finite({ControlAction{{0.0}}, ControlAction{{1.0}}});
    m.drift = [](const StepContext&, const PathView&, const ControlAction& u, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = u.u[0];
    };
    m.diffusion = constant_diffusion(p.sigma);
    m.terminal_cost = [](const PathView& x, const MeasureView&, const LawSummary&) {
        return x.at(x.grid().steps())[0];
    };
    m.cost_growth = [](double) { return 1.0; };
    m.lipschitz = 1.0 + sigma_hs(m, p.sigma);
    return m;
}

ModelSpec controlled_mean_field_model(const ModelParams& p) {
    ModelSpec m = base("controlled_mean_field", p);
    m.actions = ActionSet::finite({ControlAction{{-1.0}}, ControlAction{{0.0}}, ControlAction{{1.0}}});
    const double theta = p.theta;
    m.drift = [theta](const StepContext& ctx, const PathView& x, const ControlAction& u, std::span<double> out) {
        const auto xt = x.at(ctx.node);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = theta * (ctx.summary->mean[k] - xt[k]);
        out[0] += u.u[0];
    };
    m.diffusion = constant_diffusion(p.sigma);
    m.running_cost = [](const StepContext&, const PathView&, const ControlAction& u) { return -0.5 * u.u[0] * u.u[0]; };
    m.terminal_cost = [](const PathView& x, const MeasureView&, const LawSummary& s) {
        const auto xT = x.at(x.grid().steps());
        double r = 0.0;
        for (std::size_t k = 0; k < xT.size(); ++k) {
            const double target = k == 0 ? 1.0 : 0.0;
            r += (xT[k] - target) * (xT[k] - target);
        }
        return -r - s.mean.norm_squared();
    };
    m.cost_growth = [](double r) { return 2.0 + r * r; };
    m.lipschitz = std::max(std::abs(theta), 1.0 + sigma_hs(m, p.sigma));
    return m;
}

const std::vector<std::string>& builtin_model_tags() {
    static const std::vector<std::string> tags{"frozen",    "ou",                "ou_drift",
                                               "mean_field_ou", "quadratic",     "controlled_linear",
                                               "controlled_mean_field"};
    return tags;
}

ModelSpec builtin_model(const std::string& tag, const ModelParams& p) {
    if (tag == "frozen") return frozen_model(p);
    if (tag == "ou") return ou_model(p);
    if (tag == "ou_drift") return ou_drift_model(p);
    if (tag == "mean_field_ou") return mean_field_ou_model(p);
    if (tag == "quadratic") return quadratic_model(p);
    if (tag == "controlled_linear") return controlled_linear_model(p);
    if (tag == "controlled_mean_field") return controlled_mean_field_model(p);
    throw ConfigError("unknown model tag '" + tag + "'");
}

} // namespace pathmkv
