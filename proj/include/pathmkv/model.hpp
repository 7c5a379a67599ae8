#pragma once

#include "pathmkv/hilbert.hpp"
#include "pathmkv/measure.hpp"
#include "pathmkv/pathspace.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pathmkv {

/// Quantities of the current law that built-in coefficients need, computed
/// once per step instead of once per particle.
struct LawSummary {
    std::size_t node = 0;
    HilbertVec mean;                    ///< ∫ x_{t_node} mu(dx)
    double second_moment = 0.0;         ///< ∫ ||x||_{t_node}^2 mu(dx) = W2(mu, delta_0)^2
    std::vector<double> control_mean;   ///< mean of the control law (empty before controls are formed)
};

LawSummary summarize(const MeasureView& mu, std::size_t node, const EmpiricalControlMeasure* controls = nullptr);

/// Arguments shared by all particles at one time step.
struct StepContext {
    double t = 0.0;
    std::size_t node = 0;
    const MeasureView* law = nullptr;                 ///< empirical law of the paths stopped at t
    const LawSummary* summary = nullptr;
    const EmpiricalControlMeasure* controls = nullptr; ///< null while the controls themselves are being formed
};

/// Control set U: a finite set or a (possibly unbounded) box in R^m.
class ActionSet {
public:
    /// U = {0} in R^1.
    ActionSet() : elements_{ControlAction{{0.0}}} {}

    static ActionSet finite(std::vector<ControlAction> elements);
    static ActionSet box(std::vector<double> lower, std::vector<double> upper);
    /// U = {0} in R^1, used by uncontrolled models.
    static ActionSet singleton();

    bool is_finite() const noexcept { return finite_; }
    bool is_bounded() const;
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return elements_.size(); }
    const std::vector<ControlAction>& elements() const noexcept { return elements_; }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }

    bool contains(const ControlAction& u) const;
    /// Elements for spot checks: the set itself when finite, else corners and centre of the box
    /// (unbounded sides are replaced by ±1).
    std::vector<ControlAction> probe_points() const;

private:
    bool finite_ = true;
    std::size_t dim_ = 1;
    std::vector<ControlAction> elements_;
    std::vector<double> lower_, upper_;
};

/// Progressively measurable control: open loop u(t), feedback u(t, x_{.∧t}, mu_{[0,t]}),
/// or randomized feedback u(t, x_{.∧t}, r) with an independent uniform r per particle.
class ControlPolicy {
public:
    enum class Kind { open_loop, feedback, randomized };

    using OpenLoopFn = std::function<ControlAction(double)>;
    using FeedbackFn = std::function<ControlAction(const StepContext&, const PathView&)>;
    using RandomizedFn = std::function<ControlAction(double, const PathView&, double)>;

    /// The constant control 0 in R^1.
    ControlPolicy();

    static ControlPolicy constant(ControlAction u, std::string tag = {});
    static ControlPolicy open_loop(OpenLoopFn fn, std::string tag);
    static ControlPolicy feedback(FeedbackFn fn, std::string tag);
    static ControlPolicy randomized(RandomizedFn fn, std::string tag);

    Kind kind() const noexcept { return kind_; }
    const std::string& tag() const noexcept { return tag_; }

    /// x must already be stopped at ctx.node; r is ignored unless the policy is randomized.
    ControlAction act(const StepContext& ctx, const PathView& x, double r) const;

private:
    Kind kind_ = Kind::open_loop;
    std::string tag_;
    OpenLoopFn open_;
    FeedbackFn feedback_;
    RandomizedFn randomized_;
};

/// Writes b_t(x, mu, u, nu) into out (length d).
using DriftFn = std::function<void(const StepContext&, const PathView&, const ControlAction&, std::span<double>)>;
/// Writes the diagonal of sigma_t(x, mu, u, nu) into out (length min(d, dK)); entry k maps
/// the k-th Brownian coordinate onto e_k.
using DiffusionFn = std::function<void(const StepContext&, const PathView&, const ControlAction&, std::span<double>)>;
using RunningCostFn = std::function<double(const StepContext&, const PathView&, const ControlAction&)>;
/// g(x, mu) with mu the law of the full paths.
using TerminalCostFn = std::function<double(const PathView&, const MeasureView&, const LawSummary&)>;

enum class ControlGrowth {
    bounded,  ///< |b(0, delta_0, u, nu)| + ||sigma(0, delta_0, u, nu)|| <= L
    linear,   ///< ... <= L (1 + |u|), for square-integrable unbounded controls
};

/// (A, b, sigma, f, g, U, T) together with the constants of the standing assumptions.
struct ModelSpec {
    std::string tag;
    SpaceSpec space;
    TimeGrid grid;
    SpectralOperator A;
    DriftFn drift;
    DiffusionFn diffusion;
    RunningCostFn running_cost;    ///< optional
    TerminalCostFn terminal_cost;  ///< optional
    ActionSet actions = ActionSet::singleton();
    double lipschitz = 0.0;        ///< L
    ControlGrowth control_growth = ControlGrowth::bounded;
    /// h in |f|, |g| <= h(W2(mu, delta_0)) (1 + ||x||^2); optional.
    std::function<double(double)> cost_growth;

    std::size_t noise_dim() const { return space.d < space.dK ? space.d : space.dK; }
};

/// Structural checks plus sampled checks of non-anticipativity, the Lipschitz bounds
/// (5% slack) and the growth bound at (0, delta_0). Throws ConfigError on failure.
void validate_model(const ModelSpec& model, std::uint64_t seed = 0);

/// Constants of the a-priori estimates for (L, eta, T).
struct AprioriConstants {
    double stochastic_convolution = 0.0;  ///< C_{eta,T}^2 in the maximal inequality for the stochastic convolution
    double moment = 0.0;                  ///< C in ||X||_{S2} <= C (1 + ||xi||_{S2})
    double lipschitz_initial = 0.0;       ///< C in ||X^xi - X^xi'||_{S2} <= C ||xi - xi'||_{S2}
    double contraction = 0.0;             ///< C_{L,eta,T} in the Picard contraction C sqrt(window)
    double window = 0.0;                  ///< window length on which the Picard map is a 1/2-contraction
};
AprioriConstants apriori_constants(double L, double eta, double T);
AprioriConstants apriori_constants(const ModelSpec& model);

/// Sampler of initial paths xi; only nodes up to the start node are used.
class InitialLaw {
public:
    using Sampler = std::function<PathGrid(std::size_t particle, std::uint64_t seed, const TimeGrid& grid)>;

    InitialLaw() = default;
    InitialLaw(std::string tag, Sampler sampler) : tag_(std::move(tag)), sampler_(std::move(sampler)) {}

    /// xi = c deterministically.
    static InitialLaw constant(HilbertVec c);
    /// Particle i gets paths[i % paths.size()].
    static InitialLaw from_paths(std::vector<PathGrid> paths, std::string tag = "paths");
    /// Alternates a, b, a, b, ... over particle indices (deterministic two-point law).
    static InitialLaw alternating(HilbertVec a, HilbertVec b);
    /// Constant path with N(mean, sd^2 I) value.
    static InitialLaw gaussian(HilbertVec mean, double sd);

    const std::string& tag() const noexcept { return tag_; }
    PathGrid sample(std::size_t particle, std::uint64_t seed, const TimeGrid& grid) const;
    /// The law of xi_{.∧t}.
    InitialLaw stopped(double t) const;
    /// The law of xi + delta.
    InitialLaw shifted(HilbertVec delta) const;

private:
    std::string tag_;
    Sampler sampler_;
};

} // namespace pathmkv
