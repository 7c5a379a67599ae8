#include "doctest.h"

#include "pathmkv/errors.hpp"
#include "pathmkv/measure.hpp"
#include "pathmkv/noise.hpp"

#include <cmath>

using namespace pathmkv;

namespace {
EmpiricalPathMeasure random_measure(std::uint64_t seed, std::size_t n, const TimeGrid& g, double shift = 0.0) {
    std::vector<PathGrid> atoms;
    for (std::size_t i = 0; i < n; ++i) {
        PathGrid x(g, 1);
        double v = shift;
        for (std::size_t j = 0; j < g.nodes(); ++j) {
            v += keyed_normal(seed, Stream::auxiliary, i, j) * 0.3;
            x.at(j)[0] = v;
        }
        atoms.push_back(std::move(x));
    }
    return EmpiricalPathMeasure::uniform(std::move(atoms));
}
} // namespace

TEST_CASE("weights are validated") {
    TimeGrid g(1.0, 2);
    std::vector<PathGrid> atoms{PathGrid(g, 1), PathGrid(g, 1)};
    CHECK_THROWS_AS(EmpiricalPathMeasure(atoms, {0.5, 0.6}), ConfigError);
    CHECK_THROWS_AS(EmpiricalPathMeasure(atoms, {1.5, -0.5}), ConfigError);
    CHECK_NOTHROW(EmpiricalPathMeasure(atoms, {0.25, 0.75}));
}

TEST_CASE("W2 of shifted constant paths equals the shift") {
    TimeGrid g(1.0, 5);
    std::vector<PathGrid> a, b;
    for (int i = 0; i < 4; ++i) {
        a.push_back(PathGrid::constant(g, HilbertVec{static_cast<double>(i), 1.0}));
        b.push_back(PathGrid::constant(g, HilbertVec{static_cast<double>(i) + 0.5, 1.0}));
    }
    auto mu = EmpiricalPathMeasure::uniform(a);
    auto nu = EmpiricalPathMeasure::uniform(b);
    CHECK(wasserstein2(mu, nu, W2Mode::exact) == doctest::Approx(0.5));
    CHECK(wasserstein2(mu, nu, W2Mode::sliced) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("W2 metric properties on random path measures") {
    TimeGrid g(1.0, 8);
    auto mu = random_measure(1, 12, g);
    auto nu = random_measure(2, 12, g, 0.4);
    auto rho = random_measure(3, 12, g, -0.2);
    const double dmn = wasserstein2(mu, nu, W2Mode::exact);
    CHECK(wasserstein2(mu, mu, W2Mode::exact) == doctest::Approx(0.0));
    CHECK(dmn == doctest::Approx(wasserstein2(nu, mu, W2Mode::exact)));
    CHECK(dmn <= wasserstein2(mu, rho, W2Mode::exact) + wasserstein2(rho, nu, W2Mode::exact) + 1e-12);
}

TEST_CASE("exact W2 with unequal sizes uses the transport solver") {
    TimeGrid g(1.0, 1);
    // {0, 2} uniform against the single atom {1}: each atom moves distance 1.
    std::vector<PathGrid> a{PathGrid::constant(g, HilbertVec{0.0}), PathGrid::constant(g, HilbertVec{2.0})};
    std::vector<PathGrid> b{PathGrid::constant(g, HilbertVec{1.0})};
    CHECK(wasserstein2(EmpiricalPathMeasure::uniform(a), EmpiricalPathMeasure::uniform(b), W2Mode::exact) ==
          doctest::Approx(1.0));
}

TEST_CASE("exact W2 capacity") {
    TimeGrid g(1.0, 1);
    auto mu = random_measure(4, kExactW2Cap + 1, g);
    CHECK_THROWS_AS(wasserstein2(mu, mu, W2Mode::exact), CapacityError);
    CHECK_NOTHROW(wasserstein2(mu, mu, W2Mode::sliced));
}

TEST_CASE("mean, stopping and W2 to the origin") {
    TimeGrid g(1.0, 4);
    auto mu = random_measure(5, 20, g);
    auto stopped = stopped_measure(mu, 0.5);
    auto m_full = mean_at(mu.view(), 0.5);
    auto m_stop = mean_at(stopped.view(), 1.0);
    CHECK(m_full == m_stop);
    double s = 0.0;
    for (const auto& x : mu.atoms()) s += sup_norm(x) * sup_norm(x) / 20.0;
    CHECK(wasserstein2_to_zero(mu.view()) == doctest::Approx(std::sqrt(s)));
}

TEST_CASE("control W2 and mean") {
    auto a = EmpiricalControlMeasure::uniform({{{0.0}}, {{1.0}}});
    auto b = EmpiricalControlMeasure::uniform({{{0.5}}});
    CHECK(control_wasserstein2(a, b) == doctest::Approx(0.5));
    CHECK(a.mean()[0] == doctest::Approx(0.5));
}
