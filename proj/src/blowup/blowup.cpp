#include "blowup/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "util/error.hpp"
#include "util/fit.hpp"
#include "util/parallel.hpp"

namespace rn {

void BlowupPoint::validate(std::size_t edge_count) const {
    constexpr const char* where = "sphere-blowup/BlowupPoint";
    if (blocks.size() != coordinates.size()) fail(ErrorKind::invalid_argument, where, "coordinates must parallel blocks");
    std::vector<int> seen(edge_count, 0);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        if (blocks[j].empty()) fail(ErrorKind::invalid_argument, where, "empty block");
        if (blocks[j].size() != coordinates[j].size()) fail(ErrorKind::invalid_argument, where, "block coordinate size mismatch");
        double mx = 0.0;
        for (std::size_t i = 0; i < blocks[j].size(); ++i) {
            if (blocks[j][i] >= edge_count) fail(ErrorKind::invalid_argument, where, "edge index out of range");
            seen[blocks[j][i]]++;
            if (!(coordinates[j][i] > 0.0)) fail(ErrorKind::invalid_argument, where, "coordinates must be positive");
            mx = std::max(mx, coordinates[j][i]);
        }
        if (std::abs(mx - 1.0) > 1e-12) fail(ErrorKind::invalid_argument, where, "block not normalized to max 1");
    }
    for (int c : seen)
        if (c != 1) fail(ErrorKind::invalid_argument, where, "blocks must partition the edge set");
}

std::size_t BlowupPoint::block_of(std::size_t edge) const {
    for (std::size_t j = 0; j < blocks.size(); ++j)
        if (std::find(blocks[j].begin(), blocks[j].end(), edge) != blocks[j].end()) return j;
    return npos;
}

ResistanceSchedule ResistanceSchedule::parametric(std::vector<double> alpha, std::vector<double> beta) {
    ResistanceSchedule s;
    s.kind = Kind::parametric;
    s.alpha = std::move(alpha);
    s.beta = std::move(beta);
    s.validate();
    return s;
}

ResistanceSchedule ResistanceSchedule::tabulated(std::vector<double> ks, std::vector<std::vector<double>> values) {
    ResistanceSchedule s;
    s.kind = Kind::table;
    s.samples_k = std::move(ks);
    s.table = std::move(values);
    s.validate();
    return s;
}

std::size_t ResistanceSchedule::edge_count() const { return kind == Kind::parametric ? alpha.size() : table.size(); }

void ResistanceSchedule::validate() const {
    constexpr const char* where = "sphere-blowup/ResistanceSchedule";
    if (kind == Kind::parametric) {
        if (alpha.size() != beta.size()) fail(ErrorKind::invalid_argument, where, "alpha and beta sizes differ");
        for (std::size_t e = 0; e < alpha.size(); ++e) {
            if (!(beta[e] > 0.0) || !std::isfinite(beta[e])) fail(ErrorKind::invalid_argument, where, "beta must be positive");
            if (!(alpha[e] >= 0.0) || !std::isfinite(alpha[e])) fail(ErrorKind::invalid_argument, where, "alpha must be non-negative");
        }
        return;
    }
    for (const auto& row : table) {
        if (row.size() != samples_k.size()) fail(ErrorKind::invalid_argument, where, "table rows must match the sample count");
        for (double v : row)
            if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::invalid_argument, where, "table values must be positive");
    }
}

std::vector<double> ResistanceSchedule::log_at(double k) const {
    std::vector<double> out(edge_count());
    if (kind == Kind::parametric) {
        if (!(k >= 1.0)) fail(ErrorKind::invalid_argument, "sphere-blowup/schedule", "k must be >= 1");
        for (std::size_t e = 0; e < out.size(); ++e) out[e] = std::log(beta[e]) + alpha[e] * std::log(k);
        return out;
    }
    auto it = std::find(samples_k.begin(), samples_k.end(), k);
    if (it == samples_k.end()) fail(ErrorKind::invalid_argument, "sphere-blowup/schedule", "k is not a table sample");
    std::size_t i = static_cast<std::size_t>(it - samples_k.begin());
    for (std::size_t e = 0; e < out.size(); ++e) out[e] = std::log(table[e][i]);
    return out;
}

Resistances ResistanceSchedule::at(double k) const {
    Resistances r = log_at(k);
    for (auto& x : r) x = std::exp(x);
    return r;
}

namespace {

BlowupPoint from_levels(const std::vector<double>& growth, const std::vector<double>& log_scale, double tie) {
    // Group edges with equal growth; order groups by decreasing growth.
    std::vector<std::size_t> idx(growth.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return growth[a] > growth[b]; });
    BlowupPoint p;
    for (std::size_t i : idx) {
        if (p.blocks.empty() || std::abs(growth[p.blocks.back().front()] - growth[i]) > tie) p.blocks.emplace_back();
        p.blocks.back().push_back(i);
    }
    for (auto& block : p.blocks) {
        std::sort(block.begin(), block.end());
        double top = -HUGE_VAL;
        for (auto e : block) top = std::max(top, log_scale[e]);
        std::vector<double> coords;
        for (auto e : block) coords.push_back(std::exp(log_scale[e] - top));
        p.coordinates.push_back(std::move(coords));
    }
    return p;
}

}  // namespace

BlowupPoint classify_sequence(const ResistanceSchedule& s) {
    constexpr const char* where = "sphere-blowup/classify_sequence";
    s.validate();
    const std::size_t n = s.edge_count();
    if (n == 0) return {};
    if (s.kind == ResistanceSchedule::Kind::parametric) {
        std::vector<double> log_beta(n);
        for (std::size_t e = 0; e < n; ++e) log_beta[e] = std::log(s.beta[e]);
        return from_levels(s.alpha, log_beta, 0.0);
    }

    const std::size_t T = s.samples_k.size();
    if (T < 8) fail(ErrorKind::invalid_argument, where, "table needs at least 8 samples");
    const std::size_t start = T / 2;
    constexpr double tol = 0.05;
    // Pairwise relation over the tail: 0 same block, +1 a grows faster, −1 b grows faster.
    std::vector<std::vector<int>> rel(n, std::vector<int>(n, 0));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            std::vector<double> d;
            for (std::size_t i = start; i < T; ++i) d.push_back(std::log(s.table[a][i]) - std::log(s.table[b][i]));
            auto [lo, hi] = std::minmax_element(d.begin(), d.end());
            int verdict = 0;
            if (*hi - *lo > tol) {
                bool up = true, down = true;
                for (std::size_t i = 1; i < d.size(); ++i) {
                    if (d[i] < d[i - 1]) up = false;
                    if (d[i] > d[i - 1]) down = false;
                }
                if (!up && !down)
                    fail(ErrorKind::validation, where,
                         "log-ratio of edges " + std::to_string(a) + " and " + std::to_string(b) +
                             " oscillates; schedule not admissible at this resolution");
                verdict = up ? 1 : -1;
            }
            rel[a][b] = verdict;
            rel[b][a] = -verdict;
        }
    }
    // Rank = number of edges strictly dominated; must induce a consistent weak order.
    std::vector<double> rank(n, 0.0), log_last(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b)
            if (rel[a][b] == 1) rank[a] += 1.0;
        log_last[a] = std::log(s.table[a][T - 1]);
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            int expected = rank[a] == rank[b] ? 0 : (rank[a] > rank[b] ? 1 : -1);
            if (rel[a][b] != expected)
                fail(ErrorKind::validation, where, "ratio clustering is not transitive; schedule not admissible at this resolution");
        }
    return from_levels(rank, log_last, 0.0);
}

std::vector<double> project_base(const BlowupPoint& p, std::size_t edge_count) {
    std::vector<double> x(edge_count, 0.0);
    if (p.blocks.empty()) return x;
    double mx = 0.0;
    for (std::size_t i = 0; i < p.blocks[0].size(); ++i) {
        x.at(p.blocks[0][i]) = p.coordinates[0][i];
        mx = std::max(mx, p.coordinates[0][i]);
    }
    for (auto& v : x) v /= mx;
    return x;
}

namespace {

struct LocalBlocks {
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::vector<double>> coords;
};

// `edge_block[k]`, `edge_coord[k]` give each local edge's block index and coordinate.
void multiscale_rec(const DualGraph& g, LegFlow f, const std::vector<std::size_t>& edge_block,
                    const std::vector<double>& edge_coord, std::vector<double>& out) {
    if (g.edge_count() == 0) return;
    // Rebalance the rounding left by splitting so the sub-solver sees an exact zero sum.
    if (!f.empty()) {
        double sum = std::accumulate(f.begin(), f.end(), 0.0);
        for (auto& x : f) x -= sum / static_cast<double>(f.size());
    }
    std::size_t top = *std::min_element(edge_block.begin(), edge_block.end());
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < g.edge_count(); ++k)
        if (edge_block[k] == top) keep.push_back(k);
    Contraction con = contract_edges(g, keep);
    Resistances rho(con.graph.edge_count());
    for (auto k : keep) rho[con.edge_map[k]] = edge_coord[k];
    CurrentAssignment c1 = solve_flow(con.graph, f, rho);
    std::vector<double> currents(g.edge_count(), 0.0);
    for (auto k : keep) {
        currents[k] = c1.values[con.edge_map[k]];
        out[k] = currents[k];
    }
    if (keep.size() == g.edge_count()) return;
    for (auto& part : split_subgraph(g, f, keep, currents)) {
        if (part.graph.edge_count() == 0) continue;
        std::vector<std::size_t> sub_block;
        std::vector<double> sub_coord;
        for (auto k : part.edge_origin) {
            sub_block.push_back(edge_block[k]);
            sub_coord.push_back(edge_coord[k]);
        }
        std::vector<double> sub_out(part.graph.edge_count(), 0.0);
        multiscale_rec(part.graph, part.flow, sub_block, sub_coord, sub_out);
        for (std::size_t i = 0; i < part.edge_origin.size(); ++i) out[part.edge_origin[i]] = sub_out[i];
    }
}

}  // namespace

CurrentAssignment solve_multiscale(const DualGraph& g, const LegFlow& f, const BlowupPoint& p) {
    constexpr const char* where = "sphere-blowup/solve_multiscale";
    if (!g.connected()) fail(ErrorKind::invalid_argument, where, "graph is disconnected");
    p.validate(g.edge_count());
    double sum = 0.0, scale = 0.0;
    if (f.size() != g.legs().size()) fail(ErrorKind::invalid_argument, where, "one inflow per leg required");
    for (double x : f) {
        sum += x;
        scale += std::abs(x);
    }
    if (std::abs(sum) > 1e-12 * (1.0 + scale)) fail(ErrorKind::invalid_argument, where, "inflows do not sum to zero");
    std::vector<std::size_t> edge_block(g.edge_count());
    std::vector<double> edge_coord(g.edge_count());
    for (std::size_t j = 0; j < p.blocks.size(); ++j)
        for (std::size_t i = 0; i < p.blocks[j].size(); ++i) {
            edge_block[p.blocks[j][i]] = j;
            edge_coord[p.blocks[j][i]] = p.coordinates[j][i];
        }
    CurrentAssignment c(g.edge_count());
    multiscale_rec(g, f, edge_block, edge_coord, c.values);
    return c;
}

ConvergenceReport limit_of_flow_solutions(const DualGraph& g, const LegFlow& f, const ResistanceSchedule& s,
                                          const std::vector<double>& k_grid) {
    constexpr const char* where = "sphere-blowup/limit_of_flow_solutions";
    if (s.edge_count() != g.edge_count()) fail(ErrorKind::invalid_argument, where, "schedule edge count mismatch");
    ConvergenceReport rep;
    rep.point = classify_sequence(s);
    rep.limit = solve_multiscale(g, f, rep.point);
    rep.rows.resize(k_grid.size());
    parallel_for(k_grid.size(), [&](std::size_t i) {
        // Flow solutions are scale invariant; dividing by the smallest resistance keeps every ρ >= 1.
        auto logs = s.log_at(k_grid[i]);
        double bottom = *std::min_element(logs.begin(), logs.end());
        Resistances rho(logs.size());
        for (std::size_t e = 0; e < logs.size(); ++e) rho[e] = std::exp(logs[e] - bottom);
        auto c = solve_flow(g, f, rho);
        auto& row = rep.rows[i];
        row.k = k_grid[i];
        row.currents = c.values;
        for (std::size_t e = 0; e < c.size(); ++e)
            row.deviation = std::max(row.deviation, std::abs(c.values[e] - rep.limit.values[e]));
    });
    std::vector<double> lk, ld;
    for (const auto& row : rep.rows) {
        rep.max_deviation = std::max(rep.max_deviation, row.deviation);
        if (row.deviation > 1e-14) {
            lk.push_back(std::log(row.k));
            ld.push_back(std::log(row.deviation));
        }
    }
    if (!rep.rows.empty()) rep.final_deviation = rep.rows.back().deviation;
    if (lk.size() >= 2) rep.rate = fit_line(lk, ld).slope;
    return rep;
}

}  // namespace rn
