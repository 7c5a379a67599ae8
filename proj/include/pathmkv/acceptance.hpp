#pragma once

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pathmkv {

/// Outcome of one numerical check. `details` holds only deterministic content
/// (no timings) so that two runs with one seed can be compared exactly.
struct CheckResult {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    nlohmann::json details = nlohmann::json::object();
    std::string summary;
};

/// Checks used by the acceptance battery and the command line. Each takes a
/// parameter object whose missing keys fall back to the battery values.
namespace checks {
/// OU terminal mean and variance against the closed form.
CheckResult ou_oracle(const nlohmann::json& params, std::uint64_t seed);
/// Two-point mean-field relaxation: conserved mean and e^{-t} x0 trajectories.
CheckResult mean_field_coupling(const nlohmann::json& params, std::uint64_t seed);
/// Weak error of the terminal mean on a step-size ladder with one Brownian path.
CheckResult weak_order(const nlohmann::json& params, std::uint64_t seed);
/// S2 distance of the Yosida ladder to the reference solution.
CheckResult yosida(const nlohmann::json& params, std::uint64_t seed);
/// Restart at s from stopped paths reproduces the ensemble bit for bit.
CheckResult flow(const nlohmann::json& params, std::uint64_t seed);
/// Initial data stopped at t0 give byte-identical ensembles.
CheckResult non_anticipativity(const nlohmann::json& params, std::uint64_t seed);
/// Exact W2 against permutation brute force, plus metric axioms.
CheckResult wasserstein(const nlohmann::json& params, std::uint64_t seed);
/// Finite-difference measure derivatives against closed forms.
CheckResult measure_derivative(const nlohmann::json& params, std::uint64_t seed);
/// Functional Itô formula over the built-in functionals and models.
CheckResult ito(const nlohmann::json& params, std::uint64_t seed);
/// Dynamic programming tower identity on an uncontrolled model.
CheckResult dpp(const nlohmann::json& params, std::uint64_t seed);
/// Value gap between two constructions of one initial law.
CheckResult law_invariance(const nlohmann::json& params, std::uint64_t seed);
/// Equality of the Hamiltonian sup-forms and the randomization gap.
CheckResult hamiltonian_forms(const nlohmann::json& params, std::uint64_t seed);
/// Investment Hamiltonian closed form against numerical maximizers.
CheckResult investment(const nlohmann::json& params, std::uint64_t seed);
/// Particle-count ladder: W2 of the terminal marginal to a large reference ensemble.
CheckResult particles_convergence(const nlohmann::json& params, std::uint64_t seed);
} // namespace checks

struct Criterion {
    int id = 0;
    std::string name;
    double budget_seconds = 0.0;  ///< wall-time limit, part of the pass condition
    std::function<CheckResult(std::uint64_t)> run;
};

/// Criteria 1 to 13 with their pinned parameters.
const std::vector<Criterion>& acceptance_criteria();

/// Runs a criterion, times it and folds the time budget into `pass`.
CheckResult run_criterion(const Criterion& c, std::uint64_t seed);

/// Default seed of the battery.
inline constexpr std::uint64_t kSuiteSeed = 20240611;

} // namespace pathmkv
