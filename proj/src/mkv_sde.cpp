#include "pathmkv/mkv_sde.hpp"

#include "pathmkv/errors.hpp"
#include "pathmkv/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pathmkv {

// ---------------------------------------------------------------- ParticleEnsemble

MeasureView ParticleEnsemble::law() const { return law_at(grid.steps()); }

MeasureView ParticleEnsemble::law_at(std::size_t node) const {
    std::vector<PathView> views;
    views.reserve(particles.size());
    for (const auto& p : particles) views.push_back(p.view().stopped(node));
    return MeasureView(std::move(views));
}

std::span<const double> ParticleEnsemble::control(std::size_t particle, std::size_t step) const {
    const std::size_t offset = (particle * grid.steps() + step) * control_dim;
    return {controls.data() + offset, control_dim};
}

ControlAction ParticleEnsemble::control_action(std::size_t particle, std::size_t step) const {
    const auto c = control(particle, step);
    return ControlAction{std::vector<double>(c.begin(), c.end())};
}

EmpiricalControlMeasure ParticleEnsemble::control_law(std::size_t step) const {
    std::vector<ControlAction> atoms;
    atoms.reserve(particles.size());
    for (std::size_t i = 0; i < particles.size(); ++i) atoms.push_back(control_action(i, step));
    return EmpiricalControlMeasure::uniform(std::move(atoms));
}

double ParticleEnsemble::running_cost_until(std::size_t particle, std::size_t node) const {
    if (running_cost.empty()) return 0.0;
    return running_cost[particle * grid.nodes() + node];
}

// ---------------------------------------------------------------- helpers

MeanEstimate mean_with_stderr(std::span<const double> values) {
    MeanEstimate est;
    const std::size_t n = values.size();
    if (n == 0) return est;
    est.mean = pairwise_sum(values.data(), n) / static_cast<double>(n);
    if (n > 1) {
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - est.mean) * (values[i] - est.mean);
        const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
        est.standard_error = std::sqrt(var / static_cast<double>(n));
    }
    return est;
}

namespace {

/// Running sup of |x_s|^2 per particle, advanced node by node.
class SupTracker {
public:
    void reset(const std::vector<PathGrid>& paths, std::size_t node) {
        sup2_.assign(paths.size(), 0.0);
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const double r = paths[i].view().sup_norm_until(node);
            sup2_[i] = r * r;
        }
    }
    void include(const std::vector<PathGrid>& paths, std::size_t node) {
        for (std::size_t i = 0; i < paths.size(); ++i) {
            double s = 0.0;
            for (double v : paths[i].at(node)) s += v * v;
            sup2_[i] = std::max(sup2_[i], s);
        }
    }
    double second_moment() const {
        std::vector<double> w(sup2_.size());
        const double inv = 1.0 / static_cast<double>(sup2_.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = inv * sup2_[i];
        return pairwise_sum(w.data(), w.size());
    }

private:
    std::vector<double> sup2_;
};

void fill_after(PathGrid& p, std::size_t node) {
    for (std::size_t j = node + 1; j < p.nodes(); ++j) {
        auto src = p.at(node);
        auto dst = p.at(j);
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

ParticleEnsemble initial_ensemble(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy,
                                  std::size_t start, std::size_t end, const IntegrationOptions& opts) {
    const TimeGrid& g = model.grid;
    if (opts.particles < 2) throw ConfigError("integrate: at least two particles are required");
    ParticleEnsemble e;
    e.model_tag = model.tag;
    e.policy_tag = policy.tag();
    e.grid = g;
    e.dim = model.space.d;
    e.start_node = start;
    e.end_node = end;
    e.seed = opts.seed;
    const std::uint64_t base = opts.noise_base_steps == 0 ? g.steps() : opts.noise_base_steps;
    if (base % g.steps() != 0) throw ConfigError("integrate: noise base grid must refine the model grid");
    e.noise = NoiseStream(opts.seed, base);
    e.particles.resize(opts.particles);
    parallel_for(opts.particles, [&](std::size_t i) {
        PathGrid p = init.sample(i, opts.seed, g);
        if (p.dim() != model.space.d) throw ConfigError("initial law dimension does not match the model");
        fill_after(p, start);
        e.particles[i] = std::move(p);
    });
    e.control_dim = model.actions.dim();
    e.controls.assign(opts.particles * g.steps() * e.control_dim, 0.0);
    e.randomizers.resize(opts.particles);
    for (std::size_t i = 0; i < opts.particles; ++i) e.randomizers[i] = keyed_uniform(opts.seed, Stream::randomizer, i);
    if (model.running_cost) e.running_cost.assign(opts.particles * g.nodes(), 0.0);
    for (std::size_t i = 0; i < opts.particles; ++i) {
        for (double v : e.particles[i].data()) {
            if (!std::isfinite(v)) throw BlowupError("initial datum is not finite", start, i);
        }
    }
    return e;
}

/// Advances e over steps [from, to). Without `frozen` the law at each step is the
/// ensemble's own; with it, laws of paths and controls are read from `frozen`.
void advance(const ModelSpec& model, const ControlPolicy& policy, ParticleEnsemble& e, std::size_t from,
             std::size_t to, const ParticleEnsemble* frozen) {
    const TimeGrid& g = model.grid;
    const std::size_t N = e.size();
    const std::size_t d = model.space.d;
    const std::size_t nd = model.noise_dim();
    const std::size_t m = e.control_dim;
    const double dt = g.dt();
    std::vector<double> decay(d);
    for (std::size_t k = 0; k < d; ++k) decay[k] = std::exp(dt * model.A.eigenvalue(k));

    SupTracker sup;
    sup.reset(frozen ? frozen->particles : e.particles, from);
    std::vector<ControlAction> actions(N);

    for (std::size_t j = from; j < to; ++j) {
        const double t = g.time(j);
        const ParticleEnsemble& source = frozen ? *frozen : e;
        const MeasureView law = source.law_at(j);
        LawSummary summary;
        summary.node = j;
        summary.mean = mean_at_node(law, j);
        summary.second_moment = sup.second_moment();
        StepContext pre{t, j, &law, &summary, nullptr};

        parallel_for(N, [&](std::size_t i) {
            const PathView x = e.particles[i].view().stopped(j);
            actions[i] = policy.act(pre, x, e.randomizers[i]);
        });
        for (std::size_t i = 0; i < N; ++i) {
            if (!model.actions.contains(actions[i])) {
                throw ContractError("policy '" + policy.tag() + "' left the action set at step " + std::to_string(j));
            }
            std::copy(actions[i].u.begin(), actions[i].u.end(), e.controls.begin() + static_cast<std::ptrdiff_t>((i * g.steps() + j) * m));
        }
        const EmpiricalControlMeasure nu =
            frozen ? frozen->control_law(j) : EmpiricalControlMeasure::uniform(actions);
        summary.control_mean = nu.mean();
        const StepContext ctx{t, j, &law, &summary, &nu};

        parallel_for(N, [&](std::size_t i) {
            thread_local std::vector<double> b, sig;
            b.assign(d, 0.0);
            sig.assign(nd, 0.0);
            PathGrid& path = e.particles[i];
            const PathView x = path.view().stopped(j);
            model.drift(ctx, x, actions[i], b);
            model.diffusion(ctx, x, actions[i], sig);
            if (model.running_cost) {
                const double f = model.running_cost(ctx, x, actions[i]);
                double* rc = e.running_cost.data() + i * g.nodes();
                rc[j + 1] = rc[j] + f * dt;
            }
            auto cur = path.at(j);
            auto nxt = path.at(j + 1);
            for (std::size_t k = 0; k < d; ++k) {
                double v = cur[k] + b[k] * dt;
                if (k < nd) v += sig[k] * e.noise.increment(i, j, k, g.steps(), dt);
                nxt[k] = decay[k] * v;
            }
        });
        for (std::size_t i = 0; i < N; ++i) {
            for (double v : e.particles[i].at(j + 1)) {
                if (!std::isfinite(v)) {
                    std::ostringstream os;
                    os << "non-finite state at step " << j + 1 << " (t = " << g.time(j + 1) << ") in particle " << i
                       << " of model '" << model.tag << "'";
                    throw BlowupError(os.str(), j + 1, i);
                }
            }
        }
        sup.include(frozen ? frozen->particles : e.particles, j + 1);
    }
    parallel_for(N, [&](std::size_t i) { fill_after(e.particles[i], to); });
    if (!e.running_cost.empty()) {
        for (std::size_t i = 0; i < N; ++i) {
            double* rc = e.running_cost.data() + i * g.nodes();
            for (std::size_t j = to + 1; j < g.nodes(); ++j) rc[j] = rc[to];
        }
    }
}

std::size_t resolve_end(const TimeGrid& g, std::size_t start, const IntegrationOptions& opts) {
    const std::size_t end = opts.end_node.value_or(g.steps());
    if (end > g.steps() || end < start) throw DomainError("integrate: end node outside [t0, T]");
    return end;
}

void check_apriori(const ModelSpec& model, const ParticleEnsemble& e) {
    const AprioriConstants c = apriori_constants(model);
    std::vector<double> xi2(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double r = e.particles[i].view().sup_norm_until(e.start_node);
        xi2[i] = r * r;
    }
    const double xi = std::sqrt(pairwise_sum(xi2.data(), xi2.size()) / static_cast<double>(e.size()));
    double control_term = 0.0;
    if (model.control_growth == ControlGrowth::linear) {
        std::vector<double> u2(e.size(), 0.0);
        for (std::size_t i = 0; i < e.size(); ++i) {
            for (std::size_t j = e.start_node; j < e.end_node; ++j)
                for (double v : e.control(i, j)) u2[i] += v * v * e.grid.dt();
        }
        control_term = std::sqrt(pairwise_sum(u2.data(), u2.size()) / static_cast<double>(e.size()));
    }
    const double norm = s2_norm(e);
    const double bound = 3.0 * c.moment * (1.0 + xi + control_term);
    if (norm > bound) {
        std::ostringstream os;
        os << "a-priori estimate violated for model '" << model.tag << "': ||X||_S2 = " << norm << " > " << bound;
        throw ContractError(os.str());
    }
}

} // namespace

// ---------------------------------------------------------------- integrators

ParticleEnsemble integrate(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy, double t0,
                           const IntegrationOptions& opts) {
    const std::size_t start = model.grid.snap(t0);
    const std::size_t end = resolve_end(model.grid, start, opts);
    ParticleEnsemble e = initial_ensemble(model, init, policy, start, end, opts);
    advance(model, policy, e, start, end, nullptr);
    if (opts.check_apriori) check_apriori(model, e);
    return e;
}

ParticleEnsemble integrate(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy, double t0,
                           std::size_t particles, std::uint64_t seed) {
    IntegrationOptions opts;
    opts.particles = particles;
    opts.seed = seed;
    return integrate(model, init, policy, t0, opts);
}

ParticleEnsemble integrate_picard(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy, double t0,
                                  const IntegrationOptions& opts, const PicardOptions& popts, PicardReport* report) {
    if (!(popts.tol > 0.0)) throw ConfigError("picard: tol must be > 0");
    if (popts.max_iter == 0) throw ConfigError("picard: max_iter must be >= 1");
    const TimeGrid& g = model.grid;
    const std::size_t start = g.snap(t0);
    const std::size_t end = resolve_end(g, start, opts);

    std::vector<std::size_t> bounds{start};
    if (popts.split_windows) {
        const double window = popts.window > 0.0 ? popts.window : apriori_constants(model).window;
        const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(window / g.dt() + 1e-9)));
        for (std::size_t b = start + width; b < end; b += width) bounds.push_back(b);
    }
    bounds.push_back(end);

    PicardReport rep;
    rep.window_nodes = bounds;
    ParticleEnsemble current = initial_ensemble(model, init, policy, start, end, opts);
    for (std::size_t w = 0; w + 1 < bounds.size(); ++w) {
        const std::size_t a = bounds[w];
        const std::size_t b = bounds[w + 1];
        bool converged = false;
        std::vector<double> window_gaps;
        for (std::size_t it = 1; it <= popts.max_iter; ++it) {
            ParticleEnsemble next = current;
            advance(model, policy, next, a, b, &current);
            const double gap = s2_distance(next, current);
            window_gaps.push_back(gap);
            rep.gaps.push_back(gap);
            current = std::move(next);
            if (gap < popts.tol) {
                rep.iterations += it - 1;
                rep.final_gap = gap;
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream os;
            os << "picard iteration did not reach tol " << popts.tol << " within " << popts.max_iter
               << " maps on window [" << g.time(a) << ", " << g.time(b) << "]; last gap "
               << window_gaps.back() << ". Shorten the window (split_windows)";
            throw ConvergenceError(os.str(), rep.gaps);
        }
    }
    // Recompute the running cost self-consistently on the accepted iterate.
    if (model.running_cost) {
        ParticleEnsemble check = current;
        advance(model, policy, check, start, end, &current);
        current.running_cost = std::move(check.running_cost);
    }
    current.end_node = end;
    if (report) *report = std::move(rep);
    if (opts.check_apriori) check_apriori(model, current);
    return current;
}

ParticleEnsemble integrate_yosida(const ModelSpec& model, double n, const InitialLaw& init, const ControlPolicy& policy,
                                  double t0, const IntegrationOptions& opts) {
    ModelSpec approx = model;
    approx.A = yosida(model.A, n);
    approx.tag = model.tag + "|yosida";
    return integrate(approx, init, policy, t0, opts);
}

double s2_distance(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    if (a.size() != b.size() || !(a.grid == b.grid) || a.dim != b.dim) {
        throw ConfigError("s2_distance: ensembles differ in size, grid or dimension");
    }
    std::vector<double> d2(a.size());
    parallel_for(a.size(), [&](std::size_t i) {
        double best = 0.0;
        for (std::size_t j = 0; j < a.grid.nodes(); ++j) {
            const auto x = a.particles[i].at(j);
            const auto y = b.particles[i].at(j);
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
            best = std::max(best, s);
        }
        d2[i] = best;
    });
    return std::sqrt(pairwise_sum(d2.data(), d2.size()) / static_cast<double>(a.size()));
}

double s2_norm(const ParticleEnsemble& e) {
    std::vector<double> r2(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double r = e.particles[i].view().sup_norm();
        r2[i] = r * r;
    }
    return std::sqrt(pairwise_sum(r2.data(), r2.size()) / static_cast<double>(e.size()));
}

FlowRestartReport flow_restart_check(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy,
                                     double t0, double s, std::size_t particles, std::uint64_t seed) {
    const TimeGrid& g = model.grid;
    const std::size_t start = g.snap(t0);
    const std::size_t mid = g.snap(s);
    if (mid < start) throw DomainError("flow_restart_check: s must not precede t0");
    IntegrationOptions opts;
    opts.particles = particles;
    opts.seed = seed;
    const ParticleEnsemble full = integrate(model, init, policy, t0, opts);

    IntegrationOptions first = opts;
    first.end_node = mid;
    ParticleEnsemble part = integrate(model, init, policy, t0, first);
    std::vector<PathGrid> stopped_paths;
    stopped_paths.reserve(part.size());
    for (const auto& p : part.particles) stopped_paths.push_back(stop_at_node(p, mid));
    const InitialLaw restart_law = InitialLaw::from_paths(std::move(stopped_paths), "restart");
    const ParticleEnsemble restarted = integrate(model, restart_law, policy, g.time(mid), opts);

    FlowRestartReport rep;
    rep.restart_node = mid;
    for (std::size_t i = 0; i < full.size(); ++i) {
        rep.max_particle_gap = std::max(rep.max_particle_gap, sup_norm(full.particles[i] - restarted.particles[i]));
    }
    return rep;
}

void replay_steps(const ParticleEnsemble& e, std::size_t from, std::size_t to,
                  const std::function<void(const StepContext&)>& visit) {
    if (from > to || to > e.grid.steps()) throw DomainError("replay_steps: steps outside the grid");
    SupTracker sup;
    sup.reset(e.particles, from);
    for (std::size_t j = from; j < to; ++j) {
        const MeasureView law = e.law_at(j);
        const EmpiricalControlMeasure nu = e.control_law(j);
        LawSummary summary;
        summary.node = j;
        summary.mean = mean_at_node(law, j);
        summary.second_moment = sup.second_moment();
        summary.control_mean = nu.mean();
        const StepContext ctx{e.grid.time(j), j, &law, &summary, &nu};
        visit(ctx);
        sup.include(e.particles, j + 1);
    }
}

void export_ensemble(const ParticleEnsemble& e, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < e.size(); ++i) {
        std::ofstream out(dir / ("particle_" + std::to_string(i) + ".csv"));
        if (!out) throw ConfigError("cannot write to " + dir.string());
        write_path_csv(out, e.particles[i]);
    }
    const MeasureView law = e.law();
    const HilbertVec mean_T = mean_at_node(law, e.grid.steps());
    std::vector<double> second(e.dim, 0.0);
    {
        std::vector<double> terms(e.size());
        for (std::size_t k = 0; k < e.dim; ++k) {
            for (std::size_t i = 0; i < e.size(); ++i) {
                const double v = e.particles[i].at(e.grid.steps())[k];
                terms[i] = v * v / static_cast<double>(e.size());
            }
            second[k] = pairwise_sum(terms.data(), terms.size());
        }
    }
    nlohmann::json manifest;
    manifest["seed"] = e.seed;
    manifest["N"] = e.size();
    manifest["model"] = e.model_tag;
    manifest["policy"] = e.policy_tag;
    manifest["grid"] = {{"T", e.grid.horizon()}, {"M", e.grid.steps()}, {"start_node", e.start_node}};
    manifest["dim"] = e.dim;
    manifest["summary"] = {{"mean_T", mean_T.vector()},
                           {"second_moment_T", second},
                           {"s2_norm", s2_norm(e)}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
}

} // namespace pathmkv
