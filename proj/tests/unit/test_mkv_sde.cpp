#include "doctest.h"

#include "pathmkv/errors.hpp"
#include "pathmkv/mkv_sde.hpp"
#include "pathmkv/models.hpp"
#include "pathmkv/parallel.hpp"

#include <limits>

#include <cmath>

using namespace pathmkv;

TEST_CASE("frozen dynamics keep constant paths") {
    ModelParams p;
    p.M = 20;
    p.d = 2;
    auto model = frozen_model(p);
    validate_model(model);
    auto e = integrate(model, InitialLaw::constant(HilbertVec{1.5, -2.0}), ControlPolicy(), 0.0, 8, 1);
    for (const auto& x : e.particles)
        for (std::size_t j = 0; j < x.nodes(); ++j) CHECK(x.value(j) == HilbertVec{1.5, -2.0});
}

TEST_CASE("mean-field relaxation of a two-point law") {
    ModelParams p;
    p.M = 1000;
    p.sigma = 0.0;
    p.lambda = 0.0;
    auto model = mean_field_ou_model(p);
    validate_model(model);
    auto e = integrate(model, InitialLaw::alternating(HilbertVec{-1.0}, HilbertVec{1.0}), ControlPolicy(), 0.0, 100, 3);
    const double dt = model.grid.dt();
    for (std::size_t j = 0; j < model.grid.nodes(); ++j) {
        CHECK(std::abs(mean_at_node(e.law(), j)[0]) <= 1e-12);
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double x0 = i % 2 == 0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < model.grid.nodes(); ++j) {
            CHECK(std::abs(e.particles[i].at(j)[0] - std::exp(-model.grid.time(j)) * x0) <= dt);
        }
    }
}

TEST_CASE("OU variance at the horizon") {
    ModelParams p;
    p.M = 200;
    p.sigma = 0.5;
    p.lambda = -1.0;
    auto model = ou_model(p);
    validate_model(model);
    auto e = integrate(model, InitialLaw::constant(HilbertVec{0.0}), ControlPolicy(), 0.0, 4000, 11);
    std::vector<double> xT(e.size()), sq(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        xT[i] = e.particles[i].at(p.M)[0];
        sq[i] = xT[i] * xT[i];
    }
    auto m = mean_with_stderr(xT);
    auto v = mean_with_stderr(sq);
    // exponential Euler variance: s0^2 dt sum_{l=1}^{M} e^{2 l dt lambda}
    const double dt = model.grid.dt();
    double var = 0.0;
    for (std::size_t l = 1; l <= p.M; ++l) var += 0.25 * dt * std::exp(-2.0 * dt * static_cast<double>(l));
    CHECK(std::abs(m.mean) <= 3.0 * m.standard_error);
    CHECK(std::abs(v.mean - var) <= 3.0 * v.standard_error);
}

TEST_CASE("results do not depend on the thread count") {
    ModelParams p;
    p.M = 50;
    auto model = mean_field_ou_model(p);
    auto init = InitialLaw::gaussian(HilbertVec{0.3}, 1.0);
    set_thread_count(1);
    auto a = integrate(model, init, ControlPolicy(), 0.0, 64, 5);
    set_thread_count(3);
    auto b = integrate(model, init, ControlPolicy(), 0.0, 64, 5);
    set_thread_count(1);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.particles[i] == b.particles[i]);
}

TEST_CASE("flow property and non-anticipativity are exact") {
    ModelParams p;
    p.M = 40;
    for (const auto& tag : builtin_model_tags()) {
        auto model = builtin_model(tag, p);
        auto init = InitialLaw::gaussian(HilbertVec{0.2}, 0.7);
        auto rep = flow_restart_check(model, init, ControlPolicy::constant(model.actions.elements().empty()
                                                                                ? ControlAction{{0.0}}
                                                                                : model.actions.elements().back()),
                                      0.25, 0.5, 32, 9);
        CHECK(rep.max_particle_gap == 0.0);
        auto a = integrate(model, init, ControlPolicy::constant(model.actions.elements().back()), 0.25, 16, 2);
        auto b = integrate(model, init.stopped(0.25), ControlPolicy::constant(model.actions.elements().back()), 0.25,
                           16, 2);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.particles[i] == b.particles[i]);
    }
}

TEST_CASE("yosida ladder") {
    ModelParams p;
    p.M = 100;
    auto model = ou_model(p);
    auto init = InitialLaw::gaussian(HilbertVec{1.0}, 0.5);
    IntegrationOptions opts;
    opts.particles = 200;
    opts.seed = 4;
    auto ref = integrate(model, init, ControlPolicy(), 0.0, opts);
    double prev = 1e300;
    for (double n : {2.0, 8.0, 32.0}) {
        const double gap = s2_distance(integrate_yosida(model, n, init, ControlPolicy(), 0.0, opts), ref);
        CHECK(gap < prev);
        prev = gap;
    }
    auto frozen = frozen_model(p);
    auto f1 = integrate(frozen, init, ControlPolicy(), 0.0, opts);
    auto f2 = integrate_yosida(frozen, 5.0, init, ControlPolicy(), 0.0, opts);
    CHECK(s2_distance(f1, f2) == 0.0);
    auto unstable = model;
    unstable.A = SpectralOperator::generator({0.5});
    CHECK_THROWS_AS(integrate_yosida(unstable, 0.5, init, ControlPolicy(), 0.0, opts), DomainError);
}

TEST_CASE("picard iteration") {
    ModelParams p;
    p.M = 50;
    auto init = InitialLaw::gaussian(HilbertVec{1.0}, 0.5);
    IntegrationOptions opts;
    opts.particles = 64;
    opts.seed = 8;
    PicardOptions po;
    po.tol = 1e-10;
    PicardReport rep;

    SUBCASE("measure-independent drift needs one map") {
        auto model = ou_model(p);
        auto e = integrate_picard(model, init, ControlPolicy(), 0.0, opts, po, &rep);
        CHECK(rep.iterations == 1);
        CHECK(s2_distance(e, integrate(model, init, ControlPolicy(), 0.0, opts)) == 0.0);
    }
    SUBCASE("mean-field fixed point equals the stepping solution") {
        auto model = mean_field_ou_model(p);
        auto e = integrate_picard(model, init, ControlPolicy(), 0.0, opts, po, &rep);
        CHECK(rep.final_gap < 1e-10);
        CHECK(s2_distance(e, integrate(model, init, ControlPolicy(), 0.0, opts)) < 1e-9);
        for (std::size_t k = 2; k < rep.gaps.size(); ++k) CHECK(rep.gaps[k] < rep.gaps[k - 1]);
    }
    SUBCASE("large Lipschitz constant needs window splitting") {
        ModelParams q = p;
        q.theta = 50.0;
        q.sigma = 0.0;
        q.lambda = -1.0;
        q.M = 100;
        auto model = mean_field_ou_model(q);
        po.max_iter = 30;
        CHECK_THROWS_AS(integrate_picard(model, init, ControlPolicy(), 0.0, opts, po), ConvergenceError);
        po.split_windows = true;
        auto e = integrate_picard(model, init, ControlPolicy(), 0.0, opts, po, &rep);
        CHECK(rep.window_nodes.size() > 2);
        CHECK(s2_distance(e, integrate(model, init, ControlPolicy(), 0.0, opts)) < 1e-8);
    }
}

TEST_CASE("validation rejects bad declarations") {
    ModelParams p;
    auto model = mean_field_ou_model(p);
    model.lipschitz = 0.1;
    CHECK_THROWS_AS(validate_model(model), ConfigError);
    auto offset = ou_model(p);
    offset.drift = [](const StepContext&, const PathView&, const ControlAction&, std::span<double> out) { out[0] = 5.0; };
    CHECK_THROWS_AS(validate_model(offset), ConfigError);
    auto unbounded = controlled_linear_model(p);
    unbounded.actions = ActionSet::box({-INFINITY}, {INFINITY});
    CHECK_THROWS_AS(validate_model(unbounded), ConfigError);
    unbounded.control_growth = ControlGrowth::linear;
    CHECK_NOTHROW(validate_model(unbounded));
}

TEST_CASE("blow-up is reported with its step") {
    ModelParams p;
    p.M = 10;
    auto model = ou_model(p);
    model.drift = [](const StepContext& ctx, const PathView&, const ControlAction&, std::span<double> out) {
        out[0] = ctx.node == 4 ? std::numeric_limits<double>::infinity() : 0.0;
    };
    try {
        integrate(model, InitialLaw::constant(HilbertVec{0.0}), ControlPolicy(), 0.0, 4, 1);
        FAIL("expected blow-up");
    } catch (const BlowupError& err) {
        CHECK(err.step() == 5);
        CHECK(err.particle() == 0);
    }
}
