#include "doctest.h"

#include "pathmkv/calculus.hpp"
#include "pathmkv/errors.hpp"
#include "pathmkv/models.hpp"
#include "pathmkv/noise.hpp"

#include <chrono>
#include <cmath>

using namespace pathmkv;

namespace {

EmpiricalPathMeasure random_measure(std::uint64_t seed, std::size_t n, std::size_t d, const TimeGrid& g) {
    std::vector<PathGrid> atoms;
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        PathGrid x(g, d);
        for (std::size_t k = 0; k < d; ++k) {
            double v = keyed_normal(seed, Stream::auxiliary, i, 0, k);
            for (std::size_t j = 0; j < g.nodes(); ++j) {
                if (j > 0) v += 0.2 * keyed_normal(seed, Stream::auxiliary, i, j, k);
                x.at(j)[k] = v;
            }
        }
        atoms.push_back(std::move(x));
        w[i] = 0.5 + keyed_uniform(seed, Stream::auxiliary, i, 99);
        total += w[i];
    }
    for (auto& v : w) v /= total;
    // renormalize exactly enough for the 1e-12 weight check
    return EmpiricalPathMeasure(std::move(atoms), w);
}

double max_field_error(const std::vector<HilbertVec>& a, const std::vector<HilbertVec>& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a[i].size(); ++k) e = std::max(e, std::abs(a[i][k] - b[i][k]));
    return e;
}

} // namespace

TEST_CASE("zoo members are non-anticipative and the lifting is exact") {
    TimeGrid g(1.0, 20);
    auto mu = random_measure(1, 8, 2, g);
    auto members = zoo::ito_members(2);
    members.push_back(zoo::sup_square());
    members.push_back(zoo::mean_square_double(HilbertVec{1.0, 0.5}));
    for (const auto& phi : members) {
        for (double t : {0.0, 0.35, 1.0}) {
            CHECK_NOTHROW(check_non_anticipative(phi, t, mu.view()));
            const MeasureView law = mu.view();
            CHECK(lifted_eval(phi, t, LiftedSample{&law, 3}) == phi.eval(t, law));
        }
    }
}

TEST_CASE("anticipating functional is rejected") {
    TimeGrid g(1.0, 10);
    auto mu = random_measure(2, 4, 1, g);
    CylindricalFunctional peek;
    peek.tag = "peek";
    peek.eval = [](double, const MeasureView& m) { return m.atom(0).at(10)[0]; };
    CHECK_THROWS_AS(check_non_anticipative(peek, 0.5, mu.view()), ContractError);
    CHECK_THROWS_AS(horizontal_derivative(peek, 0.5, mu.view(), 0.1), ContractError);
}

TEST_CASE("discrete measure derivative against closed forms") {
    TimeGrid g(1.0, 20);
    auto mu = random_measure(3, 10, 2, g);
    HilbertVec h{1.0, -0.5};
    for (const auto& phi : {zoo::linear(h), zoo::mean_square(h), zoo::quadratic({0.4, 0.8})}) {
        const auto exact = analytic_measure_field(phi, 0.5, mu.view());
        const auto fd = measure_derivative_field(phi, 0.5, mu.view(), 1e-5);
        const auto rich = measure_derivative_field_richardson(phi, 0.5, mu.view(), 1e-5);
        const double e_fd = max_field_error(fd, exact);
        const double e_rich = max_field_error(rich, exact);
        CHECK(e_fd <= 1e-5);
        CHECK((e_rich <= e_fd || e_rich <= 1e-9));
    }
    // closed forms of the examples
    const auto c = zoo::constant(3.0, 2);
    CHECK(measure_derivative_discrete(c, 0.5, mu.view(), 2, h, 1e-5) == 0.0);
    const double m = zoo::linear(h).eval(0.5, mu.view());
    HilbertVec dir{0.3, 0.7};
    CHECK(measure_derivative_discrete(zoo::mean_square(h), 0.5, mu.view(), 1, dir, 1e-6) ==
          doctest::Approx(2.0 * m * inner(h, dir)).epsilon(1e-5));
    CHECK_THROWS_AS(measure_derivative_field(zoo::sup_square(), 0.5, mu.view()), UnsupportedFunctional);
}

TEST_CASE("zero-weight atoms are outside the domain") {
    TimeGrid g(1.0, 4);
    std::vector<PathGrid> atoms{PathGrid(g, 1), PathGrid(g, 1)};
    EmpiricalPathMeasure mu(atoms, {1.0, 0.0});
    CHECK_THROWS_AS(measure_derivative_discrete(zoo::linear(HilbertVec{1.0}), 0.5, mu.view(), 1, HilbertVec{1.0}, 1e-5),
                    DomainError);
}

TEST_CASE("second derivative") {
    TimeGrid g(1.0, 20);
    auto mu = random_measure(4, 6, 2, g);
    auto lin = second_derivative(zoo::linear(HilbertVec{1.0, 2.0}), 0.5, mu.view(), 2);
    CHECK(lin.matrix.max_abs_diff(DenseMatrix(2, 2)) <= 1e-5);
    auto quad = second_derivative(zoo::quadratic({0.4, 0.8}), 0.5, mu.view(), 2);
    CHECK(quad.matrix.max_abs_diff(DenseMatrix::diagonal(std::vector<double>{0.8, 1.6})) <= 1e-4);
    CHECK(quad.symmetrized.max_abs_diff(quad.symmetrized.transposed()) == 0.0);
}

TEST_CASE("horizontal derivative") {
    TimeGrid g(1.0, 100);
    auto mu = random_measure(5, 6, 1, g);
    HilbertVec h{1.0};
    CHECK(horizontal_derivative(zoo::linear(h), 0.3, mu.view(), 0.05).value == 0.0);
    // t^2 phi_1: finite difference (2t + delta) phi_1, analytic 2t phi_1
    const auto tp = zoo::time_power(h, 2);
    const auto d1 = horizontal_derivative(tp, 0.3, mu.view(), 0.04);
    const auto d2 = horizontal_derivative(tp, 0.3, mu.view(), 0.02);
    const double lin = zoo::linear(h).eval(0.3, mu.view());
    CHECK(d1.value == doctest::Approx((0.6 + 0.04) * lin).epsilon(1e-9));
    const double r = std::abs(d2.value - *d2.analytic) / std::abs(d1.value - *d1.analytic);
    CHECK(r == doctest::Approx(0.5).epsilon(1e-6));
    // t phi_1: horizontal part equals phi_1 of the frozen measure
    CHECK(horizontal_derivative(zoo::time_power(h, 1), 0.3, mu.view(), 0.05).value == doctest::Approx(lin));
    // left limit at the horizon, on paths constant in time: (2T + delta) phi_1
    std::vector<PathGrid> flat;
    for (int i = 0; i < 4; ++i) flat.push_back(PathGrid::constant(g, HilbertVec{0.5 * i - 0.3}));
    auto nu = EmpiricalPathMeasure::uniform(flat);
    const auto at_T = horizontal_derivative(tp, 1.0, nu.view(), 0.01);
    const double lin_nu = zoo::linear(h).eval(1.0, nu.view());
    CHECK(at_T.value == doctest::Approx((2.0 + 0.01) * lin_nu).epsilon(1e-9));
    CHECK(*at_T.analytic == doctest::Approx(2.0 * lin_nu));
}

TEST_CASE("consistency of equal functionals") {
    TimeGrid g(1.0, 20);
    auto mu = random_measure(6, 6, 2, g);
    HilbertVec h{1.0, 0.5};
    const MeasureView law = mu.view();
    std::vector<ConsistencySample> samples{{0.25, &law}, {0.75, &law}};
    CHECK(consistency_check(zoo::mean_square(h), zoo::mean_square_double(h), samples).pass);
    CHECK(consistency_check(zoo::linear(h), zoo::plus_zero(zoo::linear(h), 2), samples).pass);
    DenseMatrix Q = DenseMatrix::diagonal(std::vector<double>{0.4, 0.8});
    CHECK(consistency_check(zoo::quadratic({0.4, 0.8}), zoo::quadratic_dense(Q), samples).pass);
    auto bad = consistency_check(zoo::linear(h), zoo::mean_square(h), samples);
    CHECK_FALSE(bad.pass);
    CHECK_FALSE(bad.witnesses.empty());
}

TEST_CASE("Ito formula on a small ensemble") {
    ItoOptions opts;
    opts.particles = 400;
    opts.seed = 3;
    auto models = ito_models(2, 1.0, 100);
    for (const auto& model : models) {
        validate_model(model);
        auto reports = ito_verify(zoo::ito_members(2), model, InitialLaw::gaussian(HilbertVec{0.5, -0.2}, 0.6), 0.2,
                                  0.8, opts);
        for (const auto& r : reports) {
            INFO(r.model, " ", r.functional, " residual ", r.residual, " tol ", r.tolerance);
            CHECK(r.pass);
        }
    }
    // the constant drift case is exact up to rounding for the linear functional
    auto reports = ito_verify({zoo::linear(HilbertVec{1.0, 0.5})}, models[1], InitialLaw::constant(HilbertVec{0.0, 0.0}),
                              0.0, 1.0, opts);
    CHECK(reports[0].lhs == doctest::Approx(0.75));
    CHECK(std::abs(reports[0].residual) <= 1e-12);
    CHECK_THROWS_AS(ito_verify({zoo::sup_square()}, models[0], InitialLaw::constant(HilbertVec{0.0, 0.0}), 0.0, 1.0, opts),
                    UnsupportedFunctional);
}
