#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "components/geometry.hpp"
#include "graph/dual_graph.hpp"

namespace rn::testing {

// Random connected multigraph: a random spanning tree plus extra edges (loops allowed).
inline DualGraph random_connected_graph(std::mt19937_64& rng, std::size_t max_vertices, std::size_t max_edges,
                                        std::size_t legs, std::size_t max_rank = 1000) {
    std::uniform_int_distribution<std::size_t> nv(1, max_vertices);
    std::size_t n = nv(rng);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t v = 1; v < n; ++v) {
        std::uniform_int_distribution<std::size_t> pick(0, v - 1);
        edges.emplace_back(pick(rng), v);
    }
    std::size_t room = max_edges > edges.size() ? max_edges - edges.size() : 0;
    std::size_t cap = std::min(room, max_rank);
    std::uniform_int_distribution<std::size_t> extra(n == 1 && cap > 0 ? 1 : 0, cap);
    std::size_t count = extra(rng);
    std::uniform_int_distribution<std::size_t> any(0, n - 1);
    for (std::size_t i = 0; i < count; ++i) edges.emplace_back(any(rng), any(rng));
    std::shuffle(edges.begin(), edges.end(), rng);
    std::vector<Leg> leg_list;
    for (std::size_t i = 0; i < legs; ++i) leg_list.push_back({any(rng), "p" + std::to_string(i + 1)});
    return DualGraph::build(n, edges, leg_list);
}

inline std::vector<double> zero_sum(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> f(n, 0.0);
    if (n < 2) return f;
    std::uniform_real_distribution<double> u(-scale, scale);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        f[i] = u(rng);
        sum += f[i];
    }
    f[n - 1] = -sum;
    return f;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}


// Node and marked points scattered in |z| < 3 with pairwise separation at least `gap`; automatic chart scales.
inline CurveGeometry random_geometry(std::mt19937_64& rng, const DualGraph& g, double gap = 0.6) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<std::vector<cplx>> taken(g.vertex_count());
    auto place = [&](std::size_t v) {
        for (;;) {
            cplx z(u(rng), u(rng));
            if (std::abs(z) > 3.0) continue;
            bool ok = true;
            for (const auto& w : taken[v]) ok = ok && std::abs(z - w) >= gap;
            if (!ok) continue;
            taken[v].push_back(z);
            return z;
        }
    };
    std::vector<cplx> q(g.oriented_count());
    for (std::size_t e = 0; e < q.size(); ++e) q[e] = place(g.target(e));
    std::vector<SpecialPoint> p;
    for (const auto& leg : g.legs()) p.push_back(SpecialPoint::finite(place(leg.vertex)));
    return CurveGeometry::build(g, q, p);
}

// Random differential with a few poles placed outside every chart disk of component v.
inline RationalDifferential random_differential(std::mt19937_64& rng, const CurveGeometry& c, std::size_t v,
                                                std::size_t poles = 2, std::size_t degree = 2) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> far(-5.0, 5.0);
    RationalDifferential w;
    for (std::size_t i = 0; i < poles;) {
        cplx p(far(rng), far(rng));
        bool ok = true;
        for (std::size_t e : c.graph().incoming(v)) ok = ok && std::abs(c.to_chart(e, p)) > 1.5;
        if (!ok) continue;
        for (std::size_t k = 1; k <= 2; ++k) w.add_pole_term(p, k, cplx(u(rng), u(rng)));
        ++i;
    }
    for (std::size_t j = 0; j <= degree; ++j) w.add_monomial(j, 0.3 * cplx(u(rng), u(rng)));
    return w;
}

}  // namespace rn::testing
