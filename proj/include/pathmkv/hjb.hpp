#pragma once

#include "pathmkv/calculus.hpp"
#include "pathmkv/hilbert.hpp"
#include "pathmkv/measure.hpp"
#include "pathmkv/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pathmkv {

/// F(x, u, nu) at a fixed (t, mu): running reward plus the drift and diffusion
/// terms paired with the derivative fields of a candidate w.
struct HamiltonianIntegrand {
    using Fn = std::function<double(const PathView& x, const ControlAction& u, const EmpiricalControlMeasure& nu)>;

    std::string tag;
    Fn F;
    /// False when F ignores nu; the map and esssup forms require this.
    bool depends_on_law = false;

    /// Wraps a nu-free integrand.
    static HamiltonianIntegrand law_free(std::function<double(const PathView&, const ControlAction&)> f,
                                         std::string tag = "F");
};

enum class HamiltonianForm {
    bruteforce,  ///< F_t-measurable actions on the support split into two equal sub-cells per atom
    maps,        ///< all maps supp(mu) -> U
    esssup,      ///< atomwise maximum
};
std::string to_string(HamiltonianForm f);
HamiltonianForm hamiltonian_form_from_string(const std::string& s);

/// Enumeration budget for the map-based forms.
inline constexpr std::uint64_t kHamiltonianEnumerationCap = 1000000;

struct HamiltonianResult {
    double value = 0.0;
    /// Chosen action index per enumerated slot (atom, or atom x cell), lexicographically
    /// smallest among ties.
    std::vector<std::size_t> argmax;
    std::uint64_t evaluated = 0;  ///< number of assignments scored
};

/// sup over measurable actions of E[F(xi, a)] on a discrete mu and finite U.
/// Throws CapacityError when q^slots exceeds the cap, ConfigError when U is not
/// finite or when a nu-dependent F is passed to the map or esssup form.
HamiltonianResult hamiltonian_sup_finite(const HamiltonianIntegrand& F, const MeasureView& mu, const ActionSet& U,
                                         HamiltonianForm form = HamiltonianForm::esssup);

/// Partition of the randomization variable r in [0, 1] into cells with these masses.
struct RandomizationGrid {
    std::vector<double> weights;
    /// `cells` equal cells.
    static RandomizationGrid uniform(std::size_t cells);
};

/// sup over maps (atom, cell) -> U of E[F(xi, a(xi, r), law of a(xi, r))].
HamiltonianResult hamiltonian_sup_randomized(const HamiltonianIntegrand& F, const MeasureView& mu, const ActionSet& U,
                                             const RandomizationGrid& grid);

/// F(x, u, nu) = -W2(nu, uniform law on U), constant in x and u.
HamiltonianIntegrand w2_penalty_integrand(const ActionSet& U);

/// F built from the model coefficients and the derivative fields of w at (t, mu):
/// f + <b, ∂_mu w(x)> + 1/2 tr(σσ* sym(∂_x ∂_mu w(x))). The coefficients are
/// evaluated with the law summary of mu at the node of t.
HamiltonianIntegrand model_integrand(const ModelSpec& model, double t, const MeasureView& mu, const PathField& dmu,
                                     const MatrixField& dxdmu);

/// Optimal investment running reward e^{-rt}[<a1, x_t> - <a2, u> - <Mu, u>] with
/// drift contribution <Cu, p>; only a2, C, M enter the maximization over u.
struct InvestmentParams {
    HilbertVec p;     ///< ∂_mu w at the atom
    double t = 0.0;
    double rate = 0.0;
    HilbertVec a1;    ///< state weight, not part of the maximization
    HilbertVec a2;
    SpectralOperator C;
    SpectralOperator M;  ///< positive eigenvalues
    std::vector<double> lower, upper;  ///< box U
};

struct InvestmentResult {
    HilbertVec u_star;
    double value = 0.0;
    std::optional<double> unconstrained_value;  ///< e^{-rt}<Mu*, u*>, set when no coordinate is clipped
};

/// Objective <Cu, p> - e^{-rt}(<a2, u> + <Mu, u>).
double investment_objective(const InvestmentParams& ip, const HilbertVec& u);
/// u* = 1/2 M^{-1}(e^{rt} C* p - a2) clipped to the box coordinatewise.
InvestmentResult investment_hamiltonian_closed_form(const InvestmentParams& ip);
/// Exhaustive search over a tensor grid with `points` nodes per coordinate (box corners included).
InvestmentResult investment_grid_search(const InvestmentParams& ip, std::size_t points);
/// Worst-case value loss of the grid search: e^{-rt} sum_k m_k (h_k / 2)^2.
double investment_grid_bound(const InvestmentParams& ip, std::size_t points);
/// Projected gradient ascent from the box centre.
InvestmentResult investment_projected_gradient(const InvestmentParams& ip, double tol = 1e-15,
                                               std::size_t max_iter = 100000);

/// A candidate classical solution w with analytic derivative fields. When
/// `a_star_dmu` is empty the A* term is computed from the model generator.
struct CandidateSolution {
    CylindricalFunctional w;
    std::function<PathField(double, const MeasureView&)> a_star_dmu;
};

struct HjbResidual {
    double residual = 0.0;
    double terminal_gap = 0.0;
    double dt = 0.0;           ///< ∂_t w
    double a_star_term = 0.0;  ///< E<ξ_t, A*∂_mu w(ξ)>
    double hamiltonian = 0.0;
    std::vector<std::size_t> argmax;
};

/// residual = ∂_t w + E<ξ_t, A*∂_mu w(ξ)> + sup-form Hamiltonian at (t, mu);
/// terminal_gap = |w(T, mu) - E g(ξ, mu)|. Throws ContractError when w lacks
/// an analytic derivative field.
HjbResidual hjb_residual(const CandidateSolution& w, const ModelSpec& model, double t, const MeasureView& mu,
                         HamiltonianForm form = HamiltonianForm::esssup);

namespace candidates {
/// w = k(t) ∫<x_t, h> mu(dx) + c(t)
CandidateSolution affine(HilbertVec h, std::function<double(double)> k, std::function<double(double)> k_prime,
                         std::function<double(double)> c, std::function<double(double)> c_prime, std::string tag);
/// Value of ou_linear_reward: k(t) = (e^{λ(T-t)} - 1)/λ + e^{λ(T-t)} on the e1 mean.
CandidateSolution ou_linear_reward_value(std::size_t d, double lambda, double T);
/// Value of controlled_linear: e^{λ(T-t)} m_1 + (e^{λ(T-t)} - 1)/λ.
CandidateSolution controlled_linear_value(std::size_t d, double lambda, double T);
/// w = c
CandidateSolution constant(double c, std::size_t d);
/// Candidate by tag: "ou_linear_reward", "controlled_linear", "constant", each optionally suffixed "_x2".
CandidateSolution by_tag(const std::string& tag, std::size_t d, double lambda, double T);
} // namespace candidates

/// Uncontrolled OU (b = 0, σ = s0) with f = <x_t, e1> and g = <x_T, e1>.
ModelSpec ou_linear_reward_model(double T, std::size_t M, std::size_t d, double lambda, double sigma);

} // namespace pathmkv
