#pragma once

#include "pathmkv/hilbert.hpp"
#include "pathmkv/measure.hpp"
#include "pathmkv/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pathmkv {

/// x -> ∂_mu phi(t, mu)(x) on paths, prepared for one (t, mu).
using PathField = std::function<HilbertVec(const PathView&)>;
/// x -> ∂_x ∂_mu phi(t, mu)(x), prepared for one (t, mu).
using MatrixField = std::function<DenseMatrix(const PathView&)>;

/// Non-anticipative test function phi(t, mu) = phi(t, mu_{[0,t]}) with optional
/// closed-form derivatives. Times are snapped to the grid of mu.
struct CylindricalFunctional {
    std::string tag;
    std::function<double(double, const MeasureView&)> eval;
    std::function<double(double, const MeasureView&)> dt;              ///< horizontal derivative
    std::function<PathField(double, const MeasureView&)> dmu;          ///< measure derivative field
    std::function<MatrixField(double, const MeasureView&)> dxdmu;      ///< second-order field
    /// Derivatives fail to exist in the required sense; derivative operations refuse it.
    bool derivative_singular = false;

    bool has_analytic_derivatives() const { return dt && dmu && dxdmu; }
};

namespace zoo {
/// ∫ <x_t, h> mu(dx)
CylindricalFunctional linear(HilbertVec h);
/// (∫ <x_t, h> mu(dx))^2
CylindricalFunctional mean_square(HilbertVec h);
/// ∫∫ <x_t, h><y_t, h> mu(dx) mu(dy), the same function as mean_square written as a double integral
CylindricalFunctional mean_square_double(HilbertVec h);
/// ∫ <x_t, Q x_t> mu(dx) with Q = diag(q)
CylindricalFunctional quadratic(std::vector<double> q);
/// ∫ <x_t, Q x_t> mu(dx) with a dense Q
CylindricalFunctional quadratic_dense(DenseMatrix Q);
/// ∫ ||x||_t^2 mu(dx); derivative-singular
CylindricalFunctional sup_square();
/// k(t) ∫ <x_t, h> mu(dx) with k' supplied
CylindricalFunctional time_weighted_linear(HilbertVec h, std::function<double(double)> k,
                                           std::function<double(double)> k_prime, std::string tag);
/// t^p ∫ <x_t, h> mu(dx)
CylindricalFunctional time_power(HilbertVec h, int p);
/// phi = c
CylindricalFunctional constant(double c, std::size_t dim);
/// phi + 0, built by adding the zero functional term by term
CylindricalFunctional plus_zero(const CylindricalFunctional& phi, std::size_t dim);
/// Multiplies phi and all its derivatives by c
CylindricalFunctional scaled(const CylindricalFunctional& phi, double c);

/// The members used by the Itô verifier (all with analytic derivatives).
std::vector<CylindricalFunctional> ito_members(std::size_t dim);
} // namespace zoo

/// Φ̂(t, ξ̂) for the empirical lifting: ξ̂ picks atom `index` of `law`.
struct LiftedSample {
    const MeasureView* law = nullptr;
    std::size_t index = 0;
};
double lifted_eval(const CylindricalFunctional& phi, double t, const LiftedSample& xi);

/// Throws ContractError when eval(t, mu) differs bitwise from eval(t, mu_{[0,t]}).
void check_non_anticipative(const CylindricalFunctional& phi, double t, const MeasureView& mu);

struct HorizontalDerivative {
    double value = 0.0;                 ///< finite-difference value
    std::optional<double> analytic;     ///< closed form when available
    double step = 0.0;                  ///< delta actually used (multiple of the grid step)
};

/// [phi(t + delta, mu_{[0,t]}) - phi(t, mu)] / delta; at t = T the left limit is
/// extrapolated from the two points T - delta and T - 2 delta.
HorizontalDerivative horizontal_derivative(const CylindricalFunctional& phi, double t, const MeasureView& mu,
                                           double delta);

/// (1 / (eps p_i)) [phi(t, mu with x_i -> x_i + eps h 1_{[t,T]}) - phi(t, mu)]
double measure_derivative_discrete(const CylindricalFunctional& phi, double t, const MeasureView& mu, std::size_t i,
                                   const HilbertVec& h, double eps);
/// Default bump size 1e-5 (1 + ||x_i||_T).
double default_measure_epsilon(const MeasureView& mu, std::size_t i);

/// <∂_mu phi(t, mu)(x_i), e_k> for all atoms i and directions k; eps <= 0 selects the default per atom.
std::vector<HilbertVec> measure_derivative_field(const CylindricalFunctional& phi, double t, const MeasureView& mu,
                                                 double eps = 0.0);
/// Richardson combination 2 D(eps/2) - D(eps) of the field.
std::vector<HilbertVec> measure_derivative_field_richardson(const CylindricalFunctional& phi, double t,
                                                            const MeasureView& mu, double eps);

/// Analytic field evaluated on the support of mu.
std::vector<HilbertVec> analytic_measure_field(const CylindricalFunctional& phi, double t, const MeasureView& mu);

struct SecondDerivative {
    DenseMatrix matrix;
    DenseMatrix symmetrized;
};

/// Column k = [∂_mu phi(t, mu')(x_i + eps e_k 1_{[t,T]}) - ∂_mu phi(t, mu')(x_i)] / eps, where mu'
/// splits atom i into an unbumped and a bumped copy of weight p_i / 2 so that both points lie
/// in the support; the measure derivatives use the discrete formula with bump inner_eps.
SecondDerivative second_derivative(const CylindricalFunctional& phi, double t, const MeasureView& mu, std::size_t i,
                                   double eps = 1e-4, double inner_eps = 1e-4);

struct ConsistencyReport {
    bool pass = true;
    double max_eval_gap = 0.0;
    double max_dt_gap = 0.0;
    double max_dmu_gap = 0.0;
    double max_second_gap = 0.0;
    std::vector<std::string> witnesses;
};

struct ConsistencySample {
    double t = 0.0;
    const MeasureView* mu = nullptr;
};

/// Two representations of one function must have matching finite-difference derivatives.
ConsistencyReport consistency_check(const CylindricalFunctional& a, const CylindricalFunctional& b,
                                    const std::vector<ConsistencySample>& samples, double tolerance = 1e-4);

struct ItoReport {
    std::string functional;
    std::string model;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double stderr_mc = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ItoOptions {
    std::size_t particles = 4000;
    std::uint64_t seed = 0;
    std::size_t batches = 20;
    double discretization_factor = 10.0;  ///< gate: |residual| <= 3 SE + factor * dt
};

/// Checks phi(s, P_{X_{.∧s}}) - phi(t, P_{X_{.∧t}}) against the time integral of
/// ∂_t phi + E<b, ∂_mu phi(X)> + E<X_r, A* ∂_mu phi(X)> + (1/2) E tr(sigma sigma* ∂_x ∂_mu phi(X))
/// along one simulated ensemble (left-endpoint quadrature). The A* term vanishes when A = 0.
/// The standard error comes from contiguous batch means of the same residual.
std::vector<ItoReport> ito_verify(const std::vector<CylindricalFunctional>& functionals, const ModelSpec& model,
                                  const InitialLaw& init, double t, double s, const ItoOptions& opts);

/// Built-in (F, G) pairs: zero, const_drift, brownian, ou_like, mean_field (A = 0).
std::vector<ModelSpec> ito_models(std::size_t d, double T, std::size_t M);

} // namespace pathmkv
