#include "pathmkv/control_value.hpp"

#include "pathmkv/errors.hpp"
#include "pathmkv/noise.hpp"
#include "pathmkv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pathmkv {

std::vector<double> particle_rewards(const ModelSpec& model, const ParticleEnsemble& e) {
    const std::size_t N = e.size();
    const std::size_t M = e.grid.steps();
    std::vector<double> J(N, 0.0);
    if (model.running_cost) {
        for (std::size_t i = 0; i < N; ++i) J[i] = e.running_cost_until(i, M) - e.running_cost_until(i, e.start_node);
    }
    if (model.terminal_cost) {
        const MeasureView law = e.law();
        const LawSummary summary = summarize(law, M);
        parallel_for(N, [&](std::size_t i) { J[i] += model.terminal_cost(law.atom(i), law, summary); });
    }
    return J;
}

ValueEstimate reward(const ModelSpec& model, const ParticleEnsemble& e, std::vector<std::string>* warnings) {
    const std::vector<double> J = particle_rewards(model, e);
    const MeanEstimate m = mean_with_stderr(J);
    ValueEstimate v;
    v.mean = m.mean;
    v.standard_error = m.standard_error;
    v.particles = e.size();
    v.seed = e.seed;
    v.policy = e.policy_tag;
    if (warnings != nullptr && model.cost_growth) {
        const std::size_t M = e.grid.steps();
        const MeasureView law = e.law();
        const double w2 = wasserstein2_to_zero(law);
        const LawSummary summary = summarize(law, M);
        std::size_t g_violations = 0;
        for (std::size_t i = 0; model.terminal_cost && i < e.size(); ++i) {
            const double r = e.particles[i].view().sup_norm();
            if (std::abs(model.terminal_cost(law.atom(i), law, summary)) > model.cost_growth(w2) * (1.0 + r * r) + 1e-12)
                ++g_violations;
        }
        std::size_t f_violations = 0;
        if (model.running_cost) {
            replay_steps(e, e.start_node, e.end_node, [&](const StepContext& ctx) {
                const double h = model.cost_growth(std::sqrt(ctx.summary->second_moment));
                for (std::size_t i = 0; i < e.size(); ++i) {
                    const PathView x = e.particles[i].view().stopped(ctx.node);
                    const double r = x.sup_norm_until(ctx.node);
                    const double f = model.running_cost(ctx, x, e.control_action(i, ctx.node));
                    if (std::abs(f) > h * (1.0 + r * r) + 1e-12) ++f_violations;
                }
            });
        }
        if (g_violations + f_violations > 0) {
            std::ostringstream os;
            os << "cost growth bound exceeded for model '" << model.tag << "': " << g_violations
               << " terminal and " << f_violations << " running evaluations";
            warnings->push_back(os.str());
        }
    }
    return v;
}

FamilyValue estimate_value(const ModelSpec& model, const InitialLaw& init, const PolicyFamily& family, double t0,
                           std::size_t particles, std::uint64_t seed) {
    if (family.empty()) throw ConfigError("estimate_value: empty policy family");
    FamilyValue out;
    for (std::size_t k = 0; k < family.size(); ++k) {
        const ParticleEnsemble e = integrate(model, init, family[k], t0, particles, seed);
        out.members.push_back(reward(model, e));
        if (k == 0 || out.members[k].mean > out.best.mean) {
            out.best = out.members[k];
            out.best_index = k;
        }
    }
    return out;
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t r) {
    return r == 0 ? seed : hash_key(seed, Stream::auxiliary, r);
}

namespace {

struct Replica {
    double lhs = 0.0;
    double rhs = 0.0;
    double standard_error = 0.0;  ///< within-replica SE of lhs - rhs
};

Replica dpp_exact(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy, std::size_t start,
                  std::size_t mid, const DppOptions& opts) {
    const TimeGrid& g = model.grid;
    IntegrationOptions io;
    io.particles = opts.particles;
    io.seed = opts.seed;
    const ParticleEnsemble full = integrate(model, init, policy, g.time(start), io);
    const std::vector<double> J = particle_rewards(model, full);

    // continuation from the same particles at s, fresh noise, `branching` copies each
    std::vector<PathGrid> stopped_paths;
    stopped_paths.reserve(full.size());
    for (const auto& p : full.particles) stopped_paths.push_back(stop_at_node(p, mid));
    const std::size_t N = full.size();
    IntegrationOptions cont_opts;
    cont_opts.particles = N * opts.branching;
    cont_opts.seed = opts.continuation_seed;
    const ParticleEnsemble cont =
        integrate(model, InitialLaw::from_paths(std::move(stopped_paths), "continuation"), policy, g.time(mid), cont_opts);
    const std::vector<double> Jc = particle_rewards(model, cont);

    std::vector<double> lhs_terms(N), rhs_terms(N), diff(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double head = full.running_cost_until(i, mid) - full.running_cost_until(i, start);
        double tail = 0.0;
        for (std::size_t b = 0; b < opts.branching; ++b) tail += Jc[b * N + i];
        tail /= static_cast<double>(opts.branching);
        lhs_terms[i] = J[i];
        rhs_terms[i] = head + tail;
        diff[i] = lhs_terms[i] - rhs_terms[i];
    }
    Replica rep;
    rep.lhs = mean_with_stderr(lhs_terms).mean;
    rep.rhs = mean_with_stderr(rhs_terms).mean;
    rep.standard_error = mean_with_stderr(diff).standard_error;
    return rep;
}

Replica dpp_inequality(const ModelSpec& model, const InitialLaw& init, const PolicyFamily& family, std::size_t start,
                       std::size_t mid, const DppOptions& opts) {
    const TimeGrid& g = model.grid;
    const FamilyValue v0 = estimate_value(model, init, family, g.time(start), opts.particles, opts.seed);

    Replica rep;
    rep.lhs = v0.best.mean;
    bool first = true;
    double rhs_se = 0.0;
    for (const auto& alpha : family) {
        IntegrationOptions io;
        io.particles = opts.particles;
        io.seed = opts.seed;
        io.end_node = mid;
        const ParticleEnsemble head = integrate(model, init, alpha, g.time(start), io);
        std::vector<double> head_cost(head.size());
        for (std::size_t i = 0; i < head.size(); ++i)
            head_cost[i] = head.running_cost_until(i, mid) - head.running_cost_until(i, start);
        std::vector<PathGrid> stopped_paths(head.particles.begin(), head.particles.end());
        const InitialLaw at_s = InitialLaw::from_paths(std::move(stopped_paths), "dpp-state");
        // continuation over the family with the same noise
        double best_tail = 0.0;
        std::vector<double> best_terms;
        for (std::size_t k = 0; k < family.size(); ++k) {
            const ParticleEnsemble tail = integrate(model, at_s, family[k], g.time(mid), opts.particles, opts.seed);
            const std::vector<double> J = particle_rewards(model, tail);
            const double m = mean_with_stderr(J).mean;
            if (k == 0 || m > best_tail) {
                best_tail = m;
                best_terms = J;
            }
        }
        std::vector<double> total(head.size());
        for (std::size_t i = 0; i < head.size(); ++i) total[i] = head_cost[i] + best_terms[i];
        const MeanEstimate est = mean_with_stderr(total);
        if (first || est.mean > rep.rhs) {
            rep.rhs = est.mean;
            rhs_se = est.standard_error;
            first = false;
        }
    }
    rep.standard_error = std::sqrt(v0.best.standard_error * v0.best.standard_error + rhs_se * rhs_se);
    return rep;
}

} // namespace

DppReport dpp_check(const ModelSpec& model, const InitialLaw& init, const PolicyFamily& family, double t0, double s,
                    DppVariant variant, const DppOptions& opts) {
    if (family.empty()) throw ConfigError("dpp_check: empty policy family");
    if (opts.replicas == 0) throw ConfigError("dpp_check: replicas must be >= 1");
    if (opts.branching == 0) throw ConfigError("dpp_check: branching must be >= 1");
    if (variant == DppVariant::exact && !(model.actions.is_finite() && model.actions.size() == 1)) {
        throw ConfigError("dpp_check: the exact variant needs a singleton action set");
    }
    const TimeGrid& g = model.grid;
    const std::size_t start = g.snap(t0);
    const std::size_t mid = g.snap(s);
    if (mid < start) throw DomainError("dpp_check: s must not precede t0");

    std::vector<double> lhs(opts.replicas), rhs(opts.replicas), gap(opts.replicas);
    double within_se = 0.0;
    for (std::size_t r = 0; r < opts.replicas; ++r) {
        DppOptions o = opts;
        o.seed = replica_seed(opts.seed, r);
        o.continuation_seed = replica_seed(opts.continuation_seed, r);
        const Replica one = variant == DppVariant::exact ? dpp_exact(model, init, family.front(), start, mid, o)
                                                         : dpp_inequality(model, init, family, start, mid, o);
        lhs[r] = one.lhs;
        rhs[r] = one.rhs;
        gap[r] = one.lhs - one.rhs;
        within_se = one.standard_error;
    }
    DppReport rep;
    rep.variant = variant;
    rep.t0 = g.time(start);
    rep.s = g.time(mid);
    rep.replicas = opts.replicas;
    rep.lhs = mean_with_stderr(lhs).mean;
    rep.rhs = mean_with_stderr(rhs).mean;
    const MeanEstimate gm = mean_with_stderr(gap);
    rep.gap = gm.mean;
    rep.standard_error = opts.replicas > 1 ? gm.standard_error : within_se;
    const double slack = 3.0 * rep.standard_error + 1e-12 * (1.0 + std::abs(rep.lhs));
    rep.pass = variant == DppVariant::exact ? std::abs(rep.gap) <= slack : rep.gap <= slack;
    return rep;
}

std::string to_string(LawStatus s) {
    switch (s) {
    case LawStatus::pass: return "pass";
    case LawStatus::fail: return "fail";
    case LawStatus::inconclusive: return "inconclusive";
    }
    return "unknown";
}

LawInvarianceReport law_invariance_check(const ModelSpec& model, const InitialLaw& init_a, const InitialLaw& init_b,
                                         const PolicyFamily& family, double t0, std::size_t particles,
                                         std::uint64_t seed_a, std::uint64_t seed_b, std::size_t replicas) {
    if (replicas == 0) throw ConfigError("law_invariance_check: replicas must be >= 1");
    LawInvarianceReport rep;
    const TimeGrid& g = model.grid;
    const std::size_t node = g.snap(t0);
    const std::size_t d = model.space.d;

    // moment test on the initial values at t0, pooled over replicas
    const std::size_t total = particles * replicas;
    std::vector<std::vector<double>> first_a(d, std::vector<double>(total)), first_b = first_a;
    std::vector<std::vector<double>> second_a = first_a, second_b = first_a;
    for (std::size_t r = 0; r < replicas; ++r) {
        const std::uint64_t sa = replica_seed(seed_a, r);
        const std::uint64_t sb = replica_seed(seed_b, r);
        for (std::size_t i = 0; i < particles; ++i) {
            const PathGrid a = init_a.sample(i, sa, g);
            const PathGrid b = init_b.sample(i, sb, g);
            const std::size_t at = r * particles + i;
            for (std::size_t k = 0; k < d; ++k) {
                first_a[k][at] = a.at(node)[k];
                first_b[k][at] = b.at(node)[k];
                second_a[k][at] = first_a[k][at] * first_a[k][at];
                second_b[k][at] = first_b[k][at] * first_b[k][at];
            }
        }
    }
    rep.moments_match = true;
    auto compare = [&](const std::vector<double>& x, const std::vector<double>& y) {
        const MeanEstimate ex = mean_with_stderr(x);
        const MeanEstimate ey = mean_with_stderr(y);
        const double se = std::sqrt(ex.standard_error * ex.standard_error + ey.standard_error * ey.standard_error);
        const double diff = std::abs(ex.mean - ey.mean);
        if (se > 0.0) rep.max_moment_z = std::max(rep.max_moment_z, diff / se);
        if (diff > 3.0 * se + 1e-12) rep.moments_match = false;
    };
    for (std::size_t k = 0; k < d; ++k) {
        compare(first_a[k], first_b[k]);
        compare(second_a[k], second_b[k]);
    }

    std::vector<double> va(replicas), vb(replicas);
    double se_a = 0.0, se_b = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
        const FamilyValue fa = estimate_value(model, init_a, family, t0, particles, replica_seed(seed_a, r));
        const FamilyValue fb = estimate_value(model, init_b, family, t0, particles, replica_seed(seed_b, r));
        va[r] = fa.best.mean;
        vb[r] = fb.best.mean;
        se_a = fa.best.standard_error;
        se_b = fb.best.standard_error;
    }
    const MeanEstimate ma = mean_with_stderr(va);
    const MeanEstimate mb = mean_with_stderr(vb);
    if (replicas > 1) {
        se_a = ma.standard_error;
        se_b = mb.standard_error;
    }
    rep.value_a = ma.mean;
    rep.value_b = mb.mean;
    rep.gap = rep.value_a - rep.value_b;
    rep.standard_error = std::sqrt(se_a * se_a + se_b * se_b);
    if (!rep.moments_match) {
        rep.status = LawStatus::inconclusive;
    } else {
        rep.status = std::abs(rep.gap) <= 3.0 * rep.standard_error + 1e-12 * (1.0 + std::abs(rep.value_a))
                         ? LawStatus::pass
                         : LawStatus::fail;
    }
    return rep;
}

std::vector<PolicyFamily> standard_policy_families() {
    auto act = [](double v) { return ControlAction{{v}}; };
    std::vector<PolicyFamily> families;
    families.push_back({ControlPolicy::constant(act(0.0))});
    families.push_back({ControlPolicy::constant(act(-1.0)), ControlPolicy::constant(act(0.0)),
                        ControlPolicy::constant(act(1.0))});
    families.push_back({ControlPolicy::feedback(
                            [](const StepContext& ctx, const PathView& x) {
                                const double v = x.at(ctx.node)[0];
                                return ControlAction{{v < 1.0 ? 1.0 : (v > 1.0 ? -1.0 : 0.0)}};
                            },
                            "steer_to_one"),
                        ControlPolicy::feedback(
                            [](const StepContext& ctx, const PathView&) {
                                return ControlAction{{ctx.summary->mean[0] < 0.5 ? 1.0 : 0.0}};
                            },
                            "push_mean"),
                        ControlPolicy::open_loop([](double t) { return ControlAction{{t < 0.5 ? 1.0 : 0.0}}; },
                                                 "early_push")});
    families.push_back({ControlPolicy::randomized(
                            [](double, const PathView&, double r) { return ControlAction{{r < 0.5 ? 1.0 : 0.0}}; },
                            "coin"),
                        ControlPolicy::randomized(
                            [](double, const PathView&, double r) {
                                return ControlAction{{r < 1.0 / 3.0 ? -1.0 : (r < 2.0 / 3.0 ? 0.0 : 1.0)}};
                            },
                            "die")});
    return families;
}

} // namespace pathmkv
