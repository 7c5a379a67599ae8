#pragma once

#include "pathmkv/model.hpp"
#include "pathmkv/noise.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pathmkv {

/// Interacting particle approximation of X^{t0, xi, alpha}.
///
/// Brownian increments are not stored: they are regenerated from the
/// counter-based stream, keyed by (seed, particle, step, coordinate).
struct ParticleEnsemble {
    std::string model_tag;
    std::string policy_tag;
    TimeGrid grid;
    std::size_t dim = 0;
    std::size_t start_node = 0;
    std::size_t end_node = 0;
    std::uint64_t seed = 0;
    NoiseStream noise;

    std::vector<PathGrid> particles;
    /// u_j for steps j in [start_node, end_node), row-major N x M x control_dim; zero elsewhere.
    std::size_t control_dim = 0;
    std::vector<double> controls;
    /// Independent uniforms driving randomized policies, one per particle.
    std::vector<double> randomizers;
    /// Cumulative left-endpoint running cost ∫_{t0}^{t_j} f ds, N x nodes (empty without f).
    std::vector<double> running_cost;

    std::size_t size() const noexcept { return particles.size(); }
    MeasureView law() const;
    MeasureView law_at(std::size_t node) const;
    std::span<const double> control(std::size_t particle, std::size_t step) const;
    ControlAction control_action(std::size_t particle, std::size_t step) const;
    EmpiricalControlMeasure control_law(std::size_t step) const;
    double running_cost_until(std::size_t particle, std::size_t node) const;
};

struct IntegrationOptions {
    std::size_t particles = 1000;
    std::uint64_t seed = 0;
    /// Grid of the underlying Brownian path; 0 means the model grid. Coarser model
    /// grids then sum the fine increments, so step-size ladders share one path.
    std::uint64_t noise_base_steps = 0;
    /// Last node integrated to; defaults to the horizon.
    std::optional<std::size_t> end_node;
    /// Assert the a-priori moment bound (with 3x slack) after integration.
    bool check_apriori = true;
};

/// Exponential Euler for the mild equation,
///   X_{j+1} = e^{dt A} [X_j + b_j dt + sigma_j dB_j],
/// with coefficients evaluated at (t_j, X_{.∧t_j}, law of the particles stopped
/// at t_j, u_j, law of the u_j). Throws BlowupError on non-finite values.
ParticleEnsemble integrate(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy, double t0,
                           const IntegrationOptions& opts);
ParticleEnsemble integrate(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy, double t0,
                           std::size_t particles, std::uint64_t seed);

struct PicardOptions {
    double tol = 1e-10;
    std::size_t max_iter = 200;
    /// Split [t0, T] into windows no longer than the contraction window of the model.
    bool split_windows = false;
    /// Override for the window length (model time units); 0 uses the a-priori constant.
    double window = 0.0;
};

struct PicardReport {
    std::size_t iterations = 0;         ///< total Picard maps applied before acceptance, summed over windows
    double final_gap = 0.0;             ///< last S2 gap of the last window
    std::vector<double> gaps;           ///< S2 gaps between successive iterates, all windows
    std::vector<std::size_t> window_nodes;  ///< window boundaries
};

/// Fixed-point iteration on the flow of laws: each iterate re-solves every
/// particle against the laws (paths and controls) of the previous iterate.
/// Throws ConvergenceError with the gap history after max_iter maps in a window.
ParticleEnsemble integrate_picard(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy, double t0,
                                  const IntegrationOptions& opts, const PicardOptions& popts, PicardReport* report = nullptr);

/// integrate with A replaced by its Yosida approximation A_n.
ParticleEnsemble integrate_yosida(const ModelSpec& model, double n, const InitialLaw& init, const ControlPolicy& policy,
                                  double t0, const IntegrationOptions& opts);

/// (mean over particles of ||X^1_i - X^2_i||_T^2)^{1/2}
double s2_distance(const ParticleEnsemble& a, const ParticleEnsemble& b);
/// (mean over particles of ||X_i||_T^2)^{1/2}
double s2_norm(const ParticleEnsemble& e);

struct FlowRestartReport {
    double max_particle_gap = 0.0;
    std::size_t restart_node = 0;
};

/// Integrates over [t0, T] once, then over [t0, s] followed by a restart at s from
/// the stopped paths with the same noise. The gap must be exactly zero.
FlowRestartReport flow_restart_check(const ModelSpec& model, const InitialLaw& init, const ControlPolicy& policy,
                                     double t0, double s, std::size_t particles, std::uint64_t seed);

/// Rebuilds the per-step arguments of the coefficients (law of the stopped
/// particles, its summary, the control law) and calls visit(ctx) for every
/// step j in [from, to).
void replay_steps(const ParticleEnsemble& e, std::size_t from, std::size_t to,
                  const std::function<void(const StepContext&)>& visit);

/// Per-particle path CSVs (`particle_<i>.csv`) plus `manifest.json` with seed, N,
/// model tag, grid and summary moments.
void export_ensemble(const ParticleEnsemble& e, const std::filesystem::path& dir);

/// Sample mean and standard error of a scalar per-particle statistic.
struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};
MeanEstimate mean_with_stderr(std::span<const double> values);

} // namespace pathmkv
