#include "doctest.h"

#include "pathmkv/noise.hpp"
#include "pathmkv/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

using namespace pathmkv;

namespace {
double brute_force_assignment(const std::vector<double>& c, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += c[i * n + p[i]];
        best = std::min(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}
} // namespace

TEST_CASE("hungarian matches brute force on random matrices") {
    for (std::uint64_t trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 6;
        std::vector<double> c(n * n);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = keyed_uniform(trial, Stream::auxiliary, k);
        auto a = solve_assignment(c, n);
        CHECK(a.cost == doctest::Approx(brute_force_assignment(c, n)).epsilon(1e-12));
        std::vector<std::size_t> cols = a.column_of_row;
        std::sort(cols.begin(), cols.end());
        for (std::size_t i = 0; i < n; ++i) CHECK(cols[i] == i);
    }
}

TEST_CASE("transport with equal weights agrees with assignment") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 5;
        std::vector<double> c(n * n);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = keyed_uniform(100 + trial, Stream::auxiliary, k);
        std::vector<double> w(n, 1.0 / n);
        auto plan = solve_transport(c, w, w);
        CHECK(plan.cost == doctest::Approx(solve_assignment(c, n).cost / n).epsilon(1e-10));
    }
}

TEST_CASE("transport plan marginals and a hand-solved instance") {
    // 1-D points {0, 1} with weights {0.75, 0.25} to {0.5} and {2} with {0.5, 0.5}.
    std::vector<double> x{0.0, 1.0}, wx{0.75, 0.25}, y{0.5, 2.0}, wy{0.5, 0.5};
    std::vector<double> c(4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i * 2 + j] = (x[i] - y[j]) * (x[i] - y[j]);
    auto plan = solve_transport(c, wx, wy);
    // monotone coupling: 0.5 of 0 -> 0.5, 0.25 of 0 -> 2, 0.25 of 1 -> 2
    const double expected = 0.5 * 0.25 + 0.25 * 4.0 + 0.25 * 1.0;
    CHECK(plan.cost == doctest::Approx(expected));
    CHECK(wasserstein2_squared_1d(x, wx, y, wy) == doctest::Approx(expected));
    for (int i = 0; i < 2; ++i) CHECK(plan.flow[i * 2] + plan.flow[i * 2 + 1] == doctest::Approx(wx[i]));
    for (int j = 0; j < 2; ++j) CHECK(plan.flow[j] + plan.flow[2 + j] == doctest::Approx(wy[j]));
}

TEST_CASE("1-d quantile coupling agrees with general transport") {
    for (std::uint64_t trial = 0; trial < 15; ++trial) {
        const std::size_t n = 3 + trial % 4, m = 2 + trial % 5;
        std::vector<double> x(n), y(m), wx(n), wy(m);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = keyed_normal(trial, Stream::auxiliary, 1, i);
            wx[i] = keyed_uniform(trial, Stream::auxiliary, 2, i);
        }
        for (std::size_t j = 0; j < m; ++j) {
            y[j] = keyed_normal(trial, Stream::auxiliary, 3, j);
            wy[j] = keyed_uniform(trial, Stream::auxiliary, 4, j);
        }
        const double sx = std::accumulate(wx.begin(), wx.end(), 0.0);
        const double sy = std::accumulate(wy.begin(), wy.end(), 0.0);
        for (auto& w : wx) w /= sx;
        for (auto& w : wy) w /= sy;
        std::vector<double> c(n * m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) c[i * m + j] = (x[i] - y[j]) * (x[i] - y[j]);
        CHECK(solve_transport(c, wx, wy).cost == doctest::Approx(wasserstein2_squared_1d(x, wx, y, wy)).epsilon(1e-9));
    }
}
