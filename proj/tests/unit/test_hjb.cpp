#include "doctest.h"

#include "pathmkv/errors.hpp"
#include "pathmkv/hjb.hpp"
#include "pathmkv/models.hpp"
#include "pathmkv/noise.hpp"
#include "pathmkv/parallel.hpp"

#include <cmath>
#include <random>

using namespace pathmkv;

namespace {

EmpiricalPathMeasure constant_paths(const TimeGrid& g, const std::vector<double>& values, std::vector<double> weights) {
    std::vector<PathGrid> atoms;
    for (double v : values) atoms.push_back(PathGrid::constant(g, HilbertVec{{v}}));
    return EmpiricalPathMeasure(std::move(atoms), std::move(weights));
}

ActionSet scalar_actions(const std::vector<double>& values) {
    std::vector<ControlAction> a;
    for (double v : values) a.push_back(ControlAction{{v}});
    return ActionSet::finite(std::move(a));
}

} // namespace

TEST_CASE("per-atom maps beat constant controls on a two-point law") {
    const TimeGrid g(1.0, 4);
    const EmpiricalPathMeasure mu = constant_paths(g, {1.0, -1.0}, {0.5, 0.5});
    const ActionSet U = scalar_actions({-1.0, 1.0});
    const auto F = HamiltonianIntegrand::law_free(
        [](const PathView& x, const ControlAction& u) { return x.at(x.grid().steps())[0] * u.u[0]; });
    for (auto form : {HamiltonianForm::bruteforce, HamiltonianForm::maps, HamiltonianForm::esssup}) {
        CHECK(hamiltonian_sup_finite(F, mu.view(), U, form).value == 1.0);
    }
    // a constant control only reaches 0
    for (const auto& u : U.elements()) {
        const double constant_value =
            mu.weights()[0] * F.F(mu.atom(0).view(), u, {}) + mu.weights()[1] * F.F(mu.atom(1).view(), u, {});
        CHECK(constant_value == 0.0);
    }
    const auto maps = hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::maps);
    CHECK(maps.argmax == std::vector<std::size_t>{1, 0});
}

TEST_CASE("trivial Hamiltonian cases") {
    const TimeGrid g(1.0, 4);
    const ActionSet U = scalar_actions({0.0, 0.5, 2.0});
    const auto F = HamiltonianIntegrand::law_free(
        [](const PathView& x, const ControlAction& u) { return -(u.u[0] - x.at(0)[0]) * (u.u[0] - x.at(0)[0]) + u.u[0]; });
    const EmpiricalPathMeasure one = constant_paths(g, {0.4}, {1.0});
    double direct = -1e300;
    for (const auto& u : U.elements()) direct = std::max(direct, F.F(one.atom(0).view(), u, {}));
    for (auto form : {HamiltonianForm::bruteforce, HamiltonianForm::maps, HamiltonianForm::esssup})
        CHECK(hamiltonian_sup_finite(F, one.view(), U, form).value == direct);
    CHECK(hamiltonian_sup_randomized(F, one.view(), U, RandomizationGrid::uniform(1)).value == direct);

    const auto c = HamiltonianIntegrand::law_free([](const PathView&, const ControlAction&) { return 2.5; });
    const EmpiricalPathMeasure three = constant_paths(g, {0.0, 1.0, 2.0}, {0.25, 0.25, 0.5});
    for (auto form : {HamiltonianForm::bruteforce, HamiltonianForm::maps, HamiltonianForm::esssup})
        CHECK(hamiltonian_sup_finite(c, three.view(), U, form).value == 2.5);
}

TEST_CASE("three forms agree exactly on random law-free instances") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const TimeGrid g(1.0, 3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 1 + rng() % 4;
        const std::size_t q = 1 + rng() % 5;
        std::vector<double> vals(k), w(k);
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            vals[i] = unif(rng);
            w[i] = 0.1 + std::abs(unif(rng));
            s += w[i];
        }
        for (auto& x : w) x /= s;
        double wsum = 0.0;
        for (std::size_t i = 0; i + 1 < k; ++i) wsum += w[i];
        w[k - 1] = 1.0 - wsum;
        std::vector<double> acts(q);
        for (auto& a : acts) a = unif(rng);
        const EmpiricalPathMeasure mu = constant_paths(g, vals, w);
        const ActionSet U = scalar_actions(acts);
        const double c1 = unif(rng), c2 = unif(rng);
        const auto F = HamiltonianIntegrand::law_free([c1, c2](const PathView& x, const ControlAction& u) {
            const double v = x.at(0)[0];
            return std::sin(3.0 * v * u.u[0]) + c1 * u.u[0] * u.u[0] + c2 * v;
        });
        const double e = hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::esssup).value;
        CHECK(hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::maps).value == e);
        CHECK(hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::bruteforce).value == e);
        const double r = hamiltonian_sup_randomized(F, mu.view(), U, RandomizationGrid::uniform(2)).value;
        CHECK(r == e);
    }
}

TEST_CASE("enumeration is independent of the thread count and capped") {
    const TimeGrid g(1.0, 2);
    const EmpiricalPathMeasure mu = constant_paths(g, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, std::vector<double>(6, 1.0 / 6.0));
    const ActionSet U = scalar_actions({0.0, 1.0, 1.0, 2.0});  // duplicated action produces ties
    const auto F = HamiltonianIntegrand::law_free(
        [](const PathView& x, const ControlAction& u) { return -(u.u[0] - 2.0 * x.at(0)[0]) * (u.u[0] - 2.0 * x.at(0)[0]); });
    const std::size_t saved = thread_count();
    set_thread_count(1);
    const auto a = hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::maps);
    set_thread_count(3);
    const auto b = hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::maps);
    set_thread_count(saved);
    CHECK(a.value == b.value);
    CHECK(a.argmax == b.argmax);
    // ties resolve to the lower index
    for (auto i : a.argmax) CHECK(i != 2);
    const EmpiricalPathMeasure big = constant_paths(g, std::vector<double>(11, 0.0), std::vector<double>(11, 1.0 / 11.0));
    CHECK_THROWS_AS(hamiltonian_sup_finite(F, big.view(), U, HamiltonianForm::maps), CapacityError);
    CHECK_NOTHROW(hamiltonian_sup_finite(F, big.view(), U, HamiltonianForm::esssup));
}

TEST_CASE("randomization helps only when F sees the control law") {
    const TimeGrid g(1.0, 2);
    const EmpiricalPathMeasure mu = constant_paths(g, {0.3}, {1.0});
    const ActionSet U = scalar_actions({0.0, 1.0});
    const HamiltonianIntegrand F = w2_penalty_integrand(U);
    const double det = hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::bruteforce).value;
    const double det_single = hamiltonian_sup_randomized(F, mu.view(), U, RandomizationGrid::uniform(1)).value;
    const double ran = hamiltonian_sup_randomized(F, mu.view(), U, RandomizationGrid::uniform(2)).value;
    CHECK(det_single == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-14));
    CHECK(ran == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(ran > det_single);
    // the two sub-cells of the brute-force form already carry the mixing on one atom
    CHECK(det == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(hamiltonian_sup_finite(F, mu.view(), U, HamiltonianForm::esssup), ConfigError);
}

TEST_CASE("investment Hamiltonian closed form") {
    InvestmentParams ip;
    ip.p = HilbertVec{{2.0}};
    ip.a1 = HilbertVec{{0.0}};
    ip.a2 = HilbertVec{{0.0}};
    ip.C = SpectralOperator::bounded({1.0});
    ip.M = SpectralOperator::bounded({1.0});
    ip.lower = {-10.0};
    ip.upper = {10.0};
    const InvestmentResult r = investment_hamiltonian_closed_form(ip);
    CHECK(r.u_star[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(r.unconstrained_value.has_value());
    CHECK(*r.unconstrained_value == doctest::Approx(1.0).epsilon(1e-15));

    ip.p = HilbertVec{{0.0}};
    const InvestmentResult z = investment_hamiltonian_closed_form(ip);
    CHECK(z.u_star[0] == 0.0);
    CHECK(z.value == 0.0);

    ip.M = SpectralOperator::bounded({0.0});
    CHECK_THROWS_AS(investment_hamiltonian_closed_form(ip), DomainError);
}

TEST_CASE("investment closed form against grid search and projected gradient") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 1 + rng() % 3;
        InvestmentParams ip;
        ip.t = 0.5 * (1.0 + unif(rng));
        ip.rate = 0.05 * (1.0 + unif(rng));
        ip.p = HilbertVec(d);
        ip.a1 = HilbertVec(d);
        ip.a2 = HilbertVec(d);
        std::vector<double> c(d), m(d);
        for (std::size_t k = 0; k < d; ++k) {
            ip.p[k] = 2.0 * unif(rng);
            ip.a2[k] = unif(rng);
            c[k] = unif(rng);
            m[k] = 0.2 + std::abs(unif(rng));
            ip.lower.push_back(-0.5 - std::abs(unif(rng)));
            ip.upper.push_back(0.5 + std::abs(unif(rng)));
        }
        ip.C = SpectralOperator::bounded(c);
        ip.M = SpectralOperator::bounded(m);
        const InvestmentResult closed = investment_hamiltonian_closed_form(ip);
        const std::size_t pts = d == 3 ? 61 : 201;
        const InvestmentResult grid = investment_grid_search(ip, pts);
        CHECK(closed.value >= grid.value - 1e-14);
        CHECK(closed.value - grid.value <= investment_grid_bound(ip, pts) + 1e-14);
        const InvestmentResult pg = investment_projected_gradient(ip);
        CHECK(std::abs(closed.value - pg.value) <= 1e-10);
        CHECK((closed.u_star - pg.u_star).norm() <= 1e-8);
    }
}

TEST_CASE("HJB residual of exact candidates") {
    const double lambda = -0.7, T = 1.0;
    const ModelSpec m = ou_linear_reward_model(T, 20, 2, lambda, 0.4);
    EmpiricalPathMeasure mu = EmpiricalPathMeasure::uniform(
        {PathGrid::constant(m.grid, HilbertVec{{0.3, -1.0}}), PathGrid::constant(m.grid, HilbertVec{{-0.8, 0.5}}),
         PathGrid::constant(m.grid, HilbertVec{{1.7, 0.1}})});
    const CandidateSolution w = candidates::ou_linear_reward_value(2, lambda, T);
    for (double t : {0.0, 0.35, 0.9}) {
        const HjbResidual r = hjb_residual(w, m, t, mu.view());
        CHECK(std::abs(r.residual) <= 1e-12);
        CHECK(r.terminal_gap <= 1e-12);
    }
    // the doubled candidate leaves a residual
    const HjbResidual bad = hjb_residual(candidates::by_tag("ou_linear_reward_x2", 2, lambda, T), m, 0.3, mu.view());
    CHECK(std::abs(bad.residual) > 1e-3);
    CHECK(bad.terminal_gap > 1e-3);

    ModelParams p;
    p.lambda = lambda;
    p.M = 20;
    p.d = 1;
    const ModelSpec cl = controlled_linear_model(p);
    EmpiricalPathMeasure nu = EmpiricalPathMeasure::uniform(
        {PathGrid::constant(cl.grid, HilbertVec{{0.2}}), PathGrid::constant(cl.grid, HilbertVec{{-1.1}})});
    for (auto form : {HamiltonianForm::esssup, HamiltonianForm::maps, HamiltonianForm::bruteforce}) {
        const HjbResidual r = hjb_residual(candidates::controlled_linear_value(1, lambda, T), cl, 0.4, nu.view(), form);
        CHECK(std::abs(r.residual) <= 1e-12);
        CHECK(r.terminal_gap <= 1e-12);
        CHECK(r.argmax.front() == 1);
    }

    // w = 0 on a zero-reward model
    ModelParams q;
    const ModelSpec frozen = frozen_model(q);
    EmpiricalPathMeasure z = EmpiricalPathMeasure::uniform({PathGrid::constant(frozen.grid, HilbertVec{{0.5}})});
    const HjbResidual zr = hjb_residual(candidates::constant(0.0, 1), frozen, 0.5, z.view());
    CHECK(zr.residual == 0.0);
    CHECK(zr.terminal_gap == 0.0);

    CandidateSolution missing = candidates::constant(0.0, 1);
    missing.w.dxdmu = nullptr;
    CHECK_THROWS_AS(hjb_residual(missing, frozen, 0.5, z.view()), ContractError);
}

TEST_CASE("HJB residual is affine in the derivative fields at a fixed maximizer") {
    const double lambda = -0.5, T = 1.0;
    const ModelSpec m = ou_linear_reward_model(T, 10, 1, lambda, 0.3);
    EmpiricalPathMeasure mu = EmpiricalPathMeasure::uniform(
        {PathGrid::constant(m.grid, HilbertVec{{0.4}}), PathGrid::constant(m.grid, HilbertVec{{1.2}})});
    const CandidateSolution w = candidates::ou_linear_reward_value(1, lambda, T);
    const double t = 0.25;
    const HjbResidual r1 = hjb_residual(w, m, t, mu.view());
    CandidateSolution w2 = w;
    w2.w = zoo::scaled(w.w, 2.0);
    const HjbResidual r2 = hjb_residual(w2, m, t, mu.view());
    // f contributes E<x_t, e1> once; the w-dependent part doubles
    const double f_part = 0.5 * (0.4 + 1.2);
    CHECK((r2.residual - f_part) == doctest::Approx(2.0 * (r1.residual - f_part)).epsilon(1e-12));
}
