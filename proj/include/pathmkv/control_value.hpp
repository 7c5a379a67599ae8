#pragma once

#include "pathmkv/mkv_sde.hpp"
#include "pathmkv/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pathmkv {

/// Monte Carlo estimate of J or of a family-restricted value.
struct ValueEstimate {
    double mean = 0.0;
    double standard_error = 0.0;  ///< sample standard deviation / sqrt(N)
    std::size_t particles = 0;
    std::uint64_t seed = 0;
    std::string policy;
};

/// J(t0, xi, alpha) on an ensemble: particle average of the left-endpoint running
/// cost from its start node plus g(X, P_X). Growth violations of the declared
/// cost bound are appended to `warnings` when given.
ValueEstimate reward(const ModelSpec& model, const ParticleEnsemble& e, std::vector<std::string>* warnings = nullptr);
/// Per-particle rewards (running cost plus terminal cost).
std::vector<double> particle_rewards(const ModelSpec& model, const ParticleEnsemble& e);

using PolicyFamily = std::vector<ControlPolicy>;

struct FamilyValue {
    std::size_t best_index = 0;
    ValueEstimate best;
    std::vector<ValueEstimate> members;
};

/// max over the family of J with common random numbers (one seed for every
/// member). This is a lower bound for V; ties go to the lowest index.
FamilyValue estimate_value(const ModelSpec& model, const InitialLaw& init, const PolicyFamily& family, double t0,
                           std::size_t particles, std::uint64_t seed);

enum class DppVariant { exact, inequality };

struct DppOptions {
    std::size_t particles = 4000;
    std::uint64_t seed = 0;
    std::uint64_t continuation_seed = 1;  ///< fresh noise after s (exact variant)
    std::size_t branching = 1;            ///< continuation copies per particle (exact variant)
    /// Independent replicas; the standard error comes from their spread, which captures the
    /// fluctuation of the shared empirical law. With one replica the per-particle SE is used.
    std::size_t replicas = 20;
};

struct DppReport {
    DppVariant variant = DppVariant::exact;
    double t0 = 0.0;
    double s = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;  ///< lhs - rhs
    double standard_error = 0.0;
    std::size_t replicas = 0;
    bool pass = false;
};

/// Exact variant (|U| = 1): V(t0) against E∫_{t0}^s f + V(s, P_{X_{.∧s}}), the continuation
/// restarted from the same particles at s with fresh noise; |gap| <= 3 SE of the difference.
/// Inequality variant: V_family(t0) <= max over the family of [E∫_{t0}^s f + V_family(s, .)] + 3 SE.
DppReport dpp_check(const ModelSpec& model, const InitialLaw& init, const PolicyFamily& family, double t0, double s,
                    DppVariant variant, const DppOptions& opts);

enum class LawStatus { pass, fail, inconclusive };
std::string to_string(LawStatus s);

struct LawInvarianceReport {
    LawStatus status = LawStatus::inconclusive;
    double value_a = 0.0;
    double value_b = 0.0;
    double gap = 0.0;
    double standard_error = 0.0;
    bool moments_match = false;
    double max_moment_z = 0.0;  ///< largest |difference| / combined SE over first and second moments
};

/// Family values under two initial data declared equal in law, with independent
/// seeds. Each side averages `replicas` independent ensembles and takes its SE from
/// their spread. The initial moments are compared first; a mismatch gives `inconclusive`.
LawInvarianceReport law_invariance_check(const ModelSpec& model, const InitialLaw& init_a, const InitialLaw& init_b,
                                         const PolicyFamily& family, double t0, std::size_t particles,
                                         std::uint64_t seed_a, std::uint64_t seed_b, std::size_t replicas = 20);

/// Seed of replica r derived from a root seed (replica 0 keeps the root).
std::uint64_t replica_seed(std::uint64_t seed, std::size_t r);

/// Policy families on U = {-1, 0, 1} used by the law-invariance battery.
std::vector<PolicyFamily> standard_policy_families();

} // namespace pathmkv
