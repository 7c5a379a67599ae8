#include "pathmkv/transport.hpp"

#include "pathmkv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pathmkv {

Assignment solve_assignment(std::span<const double> cost, std::size_t n) {
    if (cost.size() != n * n) throw ConfigError("assignment: cost matrix must be n x n");
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Hungarian method with row/column potentials; arrays are 1-based, index 0 is a sentinel.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    Assignment out;
    out.column_of_row.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) out.column_of_row[p[j] - 1] = j - 1;
    for (std::size_t i = 0; i < n; ++i) out.cost += cost[i * n + out.column_of_row[i]];
    return out;
}

TransportPlan solve_transport(std::span<const double> cost, std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (cost.size() != n * m) throw ConfigError("transport: cost matrix must be |a| x |b|");
    const double total_a = std::accumulate(a.begin(), a.end(), 0.0);
    const double total_b = std::accumulate(b.begin(), b.end(), 0.0);
    if (std::abs(total_a - total_b) > 1e-10 * std::max(1.0, total_a)) {
        throw ConfigError("transport: marginals have different total mass");
    }
    for (double w : a) if (!(w >= 0.0)) throw DomainError("transport: negative weight");
    for (double w : b) if (!(w >= 0.0)) throw DomainError("transport: negative weight");

    constexpr double inf = std::numeric_limits<double>::infinity();
    const double eps = 1e-15 * std::max(1.0, total_a);
    TransportPlan plan{0.0, n, m, std::vector<double>(n * m, 0.0)};
    std::vector<double> supply(a.begin(), a.end());
    std::vector<double> demand(b.begin(), b.end());

    // Nodes 0..n-1 are sources, n..n+m-1 are sinks.
    const std::size_t nodes = n + m;
    std::vector<double> potential(nodes, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double lo = inf;
        for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, cost[i * m + j]);
        potential[n + j] = lo;
    }

    std::vector<double> dist(nodes);
    std::vector<std::size_t> parent(nodes);
    std::vector<char> done(nodes);
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

    for (;;) {
        const bool open_supply = std::any_of(supply.begin(), supply.end(), [&](double s) { return s > eps; });
        if (!open_supply) break;

        std::fill(dist.begin(), dist.end(), inf);
        std::fill(parent.begin(), parent.end(), none);
        std::fill(done.begin(), done.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (supply[i] > eps) dist[i] = 0.0;
        }
        // Dense Dijkstra on reduced costs.
        for (std::size_t iter = 0; iter < nodes; ++iter) {
            std::size_t v = none;
            for (std::size_t w = 0; w < nodes; ++w) {
                if (!done[w] && dist[w] < inf && (v == none || dist[w] < dist[v])) v = w;
            }
            if (v == none) break;
            done[v] = 1;
            if (v < n) {
                for (std::size_t j = 0; j < m; ++j) {
                    const std::size_t w = n + j;
                    if (done[w]) continue;
                    const double reduced = std::max(0.0, cost[v * m + j] + potential[v] - potential[w]);
                    if (dist[v] + reduced < dist[w]) {
                        dist[w] = dist[v] + reduced;
                        parent[w] = v;
                    }
                }
            } else {
                const std::size_t j = v - n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (done[i] || plan.flow[i * m + j] <= eps) continue;
                    const double reduced = std::max(0.0, -cost[i * m + j] + potential[v] - potential[i]);
                    if (dist[v] + reduced < dist[i]) {
                        dist[i] = dist[v] + reduced;
                        parent[i] = v;
                    }
                }
            }
        }

        std::size_t sink = none;
        for (std::size_t j = 0; j < m; ++j) {
            if (demand[j] > eps && dist[n + j] < inf && (sink == none || dist[n + j] < dist[sink])) sink = n + j;
        }
        if (sink == none) throw ContractError("transport: no augmenting path (infeasible marginals)");

        const double reach = dist[sink];
        for (std::size_t w = 0; w < nodes; ++w) potential[w] += std::min(dist[w], reach);

        // Bottleneck along the path.
        double push = demand[sink - n];
        std::size_t v = sink;
        while (parent[v] != none) {
            const std::size_t u = parent[v];
            if (u >= n) push = std::min(push, plan.flow[v * m + (u - n)]);  // backward edge sink u -> source v
            v = u;
        }
        push = std::min(push, supply[v]);

        v = sink;
        while (parent[v] != none) {
            const std::size_t u = parent[v];
            if (u < n) {
                plan.flow[u * m + (v - n)] += push;
            } else {
                double& f = plan.flow[v * m + (u - n)];
                f -= push;
                if (f < eps) f = 0.0;
            }
            v = u;
        }
        supply[v] -= push;
        if (supply[v] < eps) supply[v] = 0.0;
        demand[sink - n] -= push;
        if (demand[sink - n] < eps) demand[sink - n] = 0.0;
    }

    for (std::size_t k = 0; k < plan.flow.size(); ++k) plan.cost += plan.flow[k] * cost[k];
    return plan;
}

double wasserstein2_squared_1d(std::span<const double> x, std::span<const double> wx, std::span<const double> y,
                               std::span<const double> wy) {
    if (x.size() != wx.size() || y.size() != wy.size()) throw ConfigError("1-D transport: weight size mismatch");
    auto order = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        return idx;
    };
    const auto ox = order(x);
    const auto oy = order(y);
    std::size_t i = 0, j = 0;
    double rx = ox.empty() ? 0.0 : wx[ox[0]];
    double ry = oy.empty() ? 0.0 : wy[oy[0]];
    double total = 0.0;
    while (i < ox.size() && j < oy.size()) {
        const double m = std::min(rx, ry);
        const double diff = x[ox[i]] - y[oy[j]];
        total += m * diff * diff;
        rx -= m;
        ry -= m;
        if (rx <= 1e-15) {
            if (++i < ox.size()) rx = wx[ox[i]];
        }
        if (ry <= 1e-15) {
            if (++j < oy.size()) ry = wy[oy[j]];
        }
    }
    return total;
}

} // namespace pathmkv
