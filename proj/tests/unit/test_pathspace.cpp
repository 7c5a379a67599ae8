#include "doctest.h"

#include "pathmkv/errors.hpp"
#include "pathmkv/pathspace.hpp"

#include <cmath>
#include <sstream>

using namespace pathmkv;

namespace {
PathGrid ramp(const TimeGrid& g) {
    PathGrid x(g, 2);
    for (std::size_t j = 0; j < g.nodes(); ++j) x.set(j, HilbertVec{g.time(j), -2.0 * g.time(j)});
    return x;
}
} // namespace

TEST_CASE("grid snapping") {
    TimeGrid g(1.0, 10);
    CHECK(g.snap(0.0) == 0);
    CHECK(g.snap(0.3) == 3);
    CHECK(g.snap(1.0) == 10);
    CHECK_THROWS_AS(g.snap(1.5), DomainError);
    CHECK_THROWS_AS(g.snap(-0.5), DomainError);
}

TEST_CASE("stopping freezes the path after t") {
    TimeGrid g(1.0, 10);
    auto x = ramp(g);
    auto s = stop(x, 0.4);
    for (std::size_t j = 0; j <= 4; ++j) CHECK(s.value(j) == x.value(j));
    for (std::size_t j = 5; j < g.nodes(); ++j) CHECK(s.value(j) == x.value(4));
    // the view agrees with the materialized copy
    auto v = x.view().stopped(4);
    CHECK(v.materialize() == s);
    // stopping twice keeps the earlier stop
    CHECK(stop(s, 0.8) == s);
}

TEST_CASE("bump adds a jump that persists") {
    TimeGrid g(1.0, 4);
    auto x = ramp(g);
    auto b = bump(x, 0.5, HilbertVec{1.0, 0.0});
    CHECK(b.value(1) == x.value(1));
    CHECK(b.value(2)[0] == doctest::Approx(x.value(2)[0] + 1.0));
    CHECK(b.value(4)[0] == doctest::Approx(x.value(4)[0] + 1.0));
}

TEST_CASE("sup seminorm") {
    TimeGrid g(1.0, 10);
    auto x = ramp(g);
    CHECK(sup_seminorm(x, 0.5) == doctest::Approx(std::sqrt(5.0) * 0.5));
    CHECK(sup_norm(x) == doctest::Approx(std::sqrt(5.0)));
    CHECK(x.view().sup_norm_until(3) == doctest::Approx(std::sqrt(5.0) * 0.3));
}

TEST_CASE("csv round trip is bit exact") {
    TimeGrid g(0.7, 7);
    PathGrid x(g, 2);
    for (std::size_t j = 0; j < g.nodes(); ++j) x.set(j, HilbertVec{1.0 / 3.0 + static_cast<double>(j), std::exp(-0.1 * static_cast<double>(j))});
    std::stringstream ss;
    write_path_csv(ss, x);
    auto y = read_path_csv(ss);
    CHECK(y == x);
}
