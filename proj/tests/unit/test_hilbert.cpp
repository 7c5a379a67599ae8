#include "doctest.h"

#include "pathmkv/errors.hpp"
#include "pathmkv/hilbert.hpp"

#include <cmath>

using namespace pathmkv;

TEST_CASE("inner products and norms") {
    HilbertVec a{1.0, 2.0, 2.0};
    HilbertVec b{0.5, -1.0, 4.0};
    CHECK(inner(a, b) == doctest::Approx(6.5));
    CHECK(a.norm() == doctest::Approx(3.0));
    CHECK((a - b).norm_squared() == doctest::Approx(0.25 + 9.0 + 4.0));
    CHECK_THROWS_AS(inner(a, HilbertVec{1.0}), ConfigError);
}

TEST_CASE("space spec rejects empty dimensions") {
    CHECK_THROWS_AS((SpaceSpec{0, 1}.validate()), ConfigError);
    CHECK_THROWS_AS((SpaceSpec{1, 0}.validate()), ConfigError);
    CHECK_NOTHROW((SpaceSpec{3, 2}.validate()));
}

TEST_CASE("generator eta must dominate the spectrum") {
    auto A = SpectralOperator::generator({-1.0, -4.0});
    CHECK(A.eta() == doctest::Approx(-1.0));
    CHECK_THROWS_AS(SpectralOperator::generator({-1.0, 0.5}, 0.0), ConfigError);
    CHECK_NOTHROW(SpectralOperator::generator({-1.0, 0.5}, 0.5));
}

TEST_CASE("semigroup is the exponential of the spectrum") {
    auto A = SpectralOperator::generator({-1.0, -4.0, 0.0});
    HilbertVec x{1.0, 2.0, 3.0};
    auto y = semigroup_apply(A, 0.5, x);
    CHECK(y[0] == doctest::Approx(std::exp(-0.5)));
    CHECK(y[1] == doctest::Approx(2.0 * std::exp(-2.0)));
    CHECK(y[2] == doctest::Approx(3.0));
    CHECK(semigroup_apply(A, 0.0, x) == x);
    CHECK_THROWS_AS(semigroup_apply(A, -0.1, x), DomainError);
}

TEST_CASE("yosida approximation") {
    auto A = SpectralOperator::generator({-1.0, -100.0}, 0.0);
    auto An = yosida(A, 10.0);
    CHECK(An.eigenvalue(0) == doctest::Approx(-10.0 / 11.0));
    CHECK(An.eigenvalue(1) == doctest::Approx(-1000.0 / 110.0));
    CHECK(An.eta() == doctest::Approx(0.0));
    // converges eigenvalue-wise as n grows
    CHECK(yosida(A, 1e6).eigenvalue(1) == doctest::Approx(-100.0).epsilon(1e-3));
    auto B = SpectralOperator::generator({0.5}, 0.5);
    CHECK_THROWS_AS(yosida(B, 0.5), DomainError);
    CHECK(yosida(B, 1.0).eta() == doctest::Approx(1.0));
}

TEST_CASE("hilbert-schmidt norm and dense matrices") {
    auto S = SpectralOperator::hilbert_schmidt({3.0, 4.0});
    CHECK(S.hs_norm() == doctest::Approx(5.0));
    CHECK(S.operator_norm() == doctest::Approx(4.0));
    DenseMatrix m(2, 2);
    m(0, 1) = 2.0;
    auto s = m.symmetrized();
    CHECK(s(0, 1) == doctest::Approx(1.0));
    CHECK(s(1, 0) == doctest::Approx(1.0));
    CHECK(m.transposed()(1, 0) == doctest::Approx(2.0));
    CHECK(m.max_abs_diff(s) == doctest::Approx(1.0));
}
