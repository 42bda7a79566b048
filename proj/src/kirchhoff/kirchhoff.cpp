#include "kirchhoff/kirchhoff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "util/error.hpp"

namespace rn {

double CurrentAssignment::max_abs() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::abs(x));
    return m;
}

CurrentAssignment operator+(const CurrentAssignment& a, const CurrentAssignment& b) {
    CurrentAssignment out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out.values[k] = a.values[k] + b.values.at(k);
    return out;
}

CurrentAssignment operator-(const CurrentAssignment& a, const CurrentAssignment& b) {
    CurrentAssignment out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out.values[k] = a.values[k] - b.values.at(k);
    return out;
}

CurrentAssignment operator*(double s, const CurrentAssignment& a) {
    CurrentAssignment out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out.values[k] = s * a.values[k];
    return out;
}

double ElectromotiveForce::evaluate(const CycleBasis& basis, const std::vector<int>& coefficients) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < basis.chords.size(); ++i)
        sum += coefficients.at(basis.chords[i]) * values.at(i);
    return sum;
}

bool check_resistances(const Resistances& rho, std::size_t edges, const char* where) {
    if (rho.size() != edges) fail(ErrorKind::invalid_argument, where, "one resistance per edge required");
    bool flagged = false;
    for (double r : rho) {
        if (!std::isfinite(r) || r < 1e-12) fail(ErrorKind::invalid_argument, where, "resistances must be finite and >= 1e-12");
        if (r < 1e-6) flagged = true;
    }
    return flagged;
}

namespace {

void check_flow(const DualGraph& g, const LegFlow& f, const char* where) {
    if (f.size() != g.legs().size()) fail(ErrorKind::invalid_argument, where, "one inflow per leg required");
    double sum = 0.0, scale = 0.0;
    for (double x : f) {
        sum += x;
        scale += std::abs(x);
    }
    if (std::abs(sum) > 1e-12 * (1.0 + scale)) fail(ErrorKind::invalid_argument, where, "inflows do not sum to zero");
}

std::vector<bool> min_resistance_tree(const DualGraph& g, const Resistances& rho) {
    std::vector<std::size_t> order(g.edge_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rho[a] < rho[b]; });
    std::vector<std::size_t> parent(g.vertex_count());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<bool> in_tree(g.edge_count(), false);
    for (auto k : order) {
        auto [a, b] = g.ends(k);
        std::size_t ra = find(a), rb = find(b);
        if (ra == rb) continue;
        parent[ra] = rb;
        in_tree[k] = true;
    }
    return in_tree;
}

// Currents on the tree carrying the inflows; zero on chords.
std::vector<double> tree_flow(const DualGraph& g, const LegFlow& f, const std::vector<bool>& in_tree) {
    const std::size_t n = g.vertex_count();
    std::vector<double> net(n, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) net[g.legs()[i].vertex] += f[i];
    std::vector<std::size_t> parent_edge(n, npos), order;
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    while (!q.empty()) {
        std::size_t v = q.front();
        q.pop();
        order.push_back(v);
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            if (!in_tree[k]) continue;
            for (std::size_t e : {DualGraph::forward(k), DualGraph::forward(k) + 1}) {
                if (g.source(e) != v || seen[g.target(e)]) continue;
                seen[g.target(e)] = true;
                parent_edge[g.target(e)] = e;
                q.push(g.target(e));
            }
        }
    }
    std::vector<double> c(g.edge_count(), 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        std::size_t v = *it;
        if (v == 0) continue;
        std::size_t e = parent_edge[v];
        double into_v = -net[v];  // current entering the subtree of v along e
        c[DualGraph::unoriented(e)] = (e & 1U) ? -into_v : into_v;
        net[g.source(e)] += net[v];
    }
    return c;
}

// Mesh solve on the fundamental cycles of a minimum-resistance spanning tree.
// With that tree every chord dominates its cycle, and Jacobi scaling keeps the
// system well conditioned even for resistance ratios far beyond 1e12.
CurrentAssignment mesh_solve(const DualGraph& g, const LegFlow* f, const ElectromotiveForce* emf,
                             const Resistances& rho) {
    std::vector<bool> in_tree = min_resistance_tree(g, rho);
    CycleBasis mesh = fundamental_cycles(g, in_tree);
    std::vector<double> base = f ? tree_flow(g, *f, in_tree) : std::vector<double>(g.edge_count(), 0.0);
    const std::size_t m = mesh.cycles.size();
    CurrentAssignment c(g.edge_count());
    c.values = base;
    if (m == 0) return c;

    CycleBasis reference;
    if (emf) reference = cycle_basis(g);

    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& ci = mesh.cycles[i].coefficients;
        for (std::size_t j = 0; j <= i; ++j) {
            const auto& cj = mesh.cycles[j].coefficients;
            double s = 0.0;
            for (std::size_t k = 0; k < g.edge_count(); ++k)
                if (ci[k] && cj[k]) s += ci[k] * cj[k] * rho[k];
            R(i, j) = R(j, i) = s;
        }
        double drop = 0.0;
        for (std::size_t k = 0; k < g.edge_count(); ++k) drop += ci[k] * rho[k] * base[k];
        b(i) = (emf ? emf->evaluate(reference, ci) : 0.0) - drop;
    }
    Eigen::VectorXd d = R.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd S = d.asDiagonal() * R * d.asDiagonal();
    Eigen::VectorXd rhs = d.asDiagonal() * b;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    Eigen::VectorXd y = ldlt.solve(rhs);
    y += ldlt.solve(rhs - S * y);
    Eigen::VectorXd x = d.asDiagonal() * y;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& ci = mesh.cycles[i].coefficients;
        for (std::size_t k = 0; k < g.edge_count(); ++k)
            if (ci[k]) c.values[k] += ci[k] * x(i);
    }
    return c;
}

}  // namespace

CurrentAssignment solve_flow(const DualGraph& g, const LegFlow& f, const Resistances& rho) {
    constexpr const char* where = "kirchhoff-solver/solve_flow";
    if (!g.connected()) fail(ErrorKind::invalid_argument, where, "graph is disconnected");
    check_resistances(rho, g.edge_count(), where);
    check_flow(g, f, where);
    return mesh_solve(g, &f, nullptr, rho);
}

CurrentAssignment solve_force(const DualGraph& g, const ElectromotiveForce& emf, const Resistances& rho) {
    constexpr const char* where = "kirchhoff-solver/solve_force";
    if (!g.connected()) fail(ErrorKind::invalid_argument, where, "graph is disconnected");
    check_resistances(rho, g.edge_count(), where);
    if (emf.values.size() != g.cycle_rank())
        fail(ErrorKind::invalid_argument, where, "one electromotive force value per basis cycle required");
    return mesh_solve(g, nullptr, &emf, rho);
}

CurrentAssignment solve_general(const DualGraph& g, const LegFlow& f, const ElectromotiveForce& emf,
                                const Resistances& rho) {
    constexpr const char* where = "kirchhoff-solver/solve_general";
    CurrentAssignment flow = solve_flow(g, f, rho);
    CurrentAssignment force = solve_force(g, emf, rho);
    CurrentAssignment joint = mesh_solve(g, &f, &emf, rho);
    CurrentAssignment sum = flow + force;
    double scale = 1.0 + sum.max_abs();
    for (std::size_t k = 0; k < sum.size(); ++k)
        if (std::abs(sum.values[k] - joint.values[k]) > 1e-10 * scale)
            fail(ErrorKind::numerical, where, "superposition check failed");
    return joint;
}

CurrentAssignment solve_flow_laplacian(const DualGraph& g, const LegFlow& f, const Resistances& rho) {
    constexpr const char* where = "kirchhoff-solver/solve_flow_laplacian";
    if (!g.connected()) fail(ErrorKind::invalid_argument, where, "graph is disconnected");
    check_resistances(rho, g.edge_count(), where);
    check_flow(g, f, where);
    const std::size_t n = g.vertex_count();
    CurrentAssignment c(g.edge_count());
    if (n == 1) return c;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd inj = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        auto [a, b] = g.ends(k);
        if (a == b) continue;
        double w = 1.0 / rho[k];
        L(a, a) += w;
        L(b, b) += w;
        L(a, b) -= w;
        L(b, a) -= w;
    }
    for (std::size_t i = 0; i < f.size(); ++i) inj(g.legs()[i].vertex) += f[i];
    Eigen::VectorXd V = Eigen::VectorXd::Zero(n);
    V.tail(n - 1) = L.bottomRightCorner(n - 1, n - 1).ldlt().solve(inj.tail(n - 1));
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        auto [a, b] = g.ends(k);
        c.values[k] = (a == b) ? 0.0 : (V(a) - V(b)) / rho[k];
    }
    return c;
}

VoltagePotential voltage_potential(const DualGraph& g, const CurrentAssignment& c, const Resistances& rho) {
    constexpr const char* where = "kirchhoff-solver/voltage_potential";
    if (!g.connected()) fail(ErrorKind::invalid_argument, where, "graph is disconnected");
    check_resistances(rho, g.edge_count(), where);
    const std::size_t n = g.vertex_count();
    VoltagePotential out;
    out.values.assign(n, 0.0);
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    while (!q.empty()) {
        std::size_t v = q.front();
        q.pop();
        for (std::size_t e = 0; e < g.oriented_count(); ++e) {
            if (g.source(e) != v || seen[g.target(e)]) continue;
            seen[g.target(e)] = true;
            out.values[g.target(e)] = out.values[v] - c.at(e) * rho[e >> 1U];
            q.push(g.target(e));
        }
    }
    double scale = 1.0;
    for (double x : out.values) scale = std::max(scale, std::abs(x));
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        auto [a, b] = g.ends(k);
        double residual = out.values[b] - out.values[a] + c.values[k] * rho[k];
        if (std::abs(residual) > 1e-9 * scale)
            fail(ErrorKind::numerical, where, "Ohm's law residual exceeds tolerance; currents are not a flow solution");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return out.values[a] > out.values[b]; });
    for (std::size_t i : idx) {
        if (!out.order.empty() && std::abs(out.values[out.order.back().front()] - out.values[i]) <= 1e-9 * scale)
            out.order.back().push_back(i);
        else
            out.order.push_back({i});
    }
    return out;
}

double cycle_drop(const OrientedCycle& cyc, const CurrentAssignment& c, const Resistances& rho) {
    double s = 0.0;
    for (auto e : cyc.edges) s += c.at(e) * rho[e >> 1U];
    return s;
}

KirchhoffResiduals kirchhoff_residuals(const DualGraph& g, const LegFlow& f, const ElectromotiveForce& emf,
                                       const Resistances& rho, const CurrentAssignment& c) {
    KirchhoffResiduals r;
    std::vector<double> net(g.vertex_count(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) net[g.legs()[i].vertex] += f[i];
    for (std::size_t e = 0; e < g.oriented_count(); ++e) net[g.target(e)] += c.at(e);
    for (double x : net) r.conservation = std::max(r.conservation, std::abs(x));
    CycleBasis basis = cycle_basis(g);
    for (std::size_t i = 0; i < basis.cycles.size(); ++i) {
        double target = emf.values.empty() ? 0.0 : emf.values[i];
        r.cycle = std::max(r.cycle, std::abs(cycle_drop(basis.cycles[i], c, rho) - target));
    }
    return r;
}

double flow_bound(const LegFlow& f) {
    double s = 0.0;
    for (double x : f) s += std::abs(x);
    return 0.5 * s;
}

std::vector<OrientedCycle> simple_cycles(const DualGraph& g, const CycleBasis& basis) {
    const std::size_t rank = basis.cycles.size();
    std::vector<OrientedCycle> out;
    if (rank == 0) return out;
    if (rank > 24) fail(ErrorKind::invalid_argument, "kirchhoff-solver/simple_cycles", "cycle rank too large to enumerate");
    std::vector<std::vector<std::size_t>> support(rank);
    for (std::size_t i = 0; i < rank; ++i)
        for (std::size_t k = 0; k < g.edge_count(); ++k)
            if (basis.cycles[i].coefficients[k] != 0) support[i].push_back(k);
    std::vector<int> parity(g.edge_count());
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << rank); ++mask) {
        std::fill(parity.begin(), parity.end(), 0);
        for (std::size_t i = 0; i < rank; ++i)
            if (mask >> i & 1U)
                for (auto k : support[i]) parity[k] ^= 1;
        std::vector<int> degree(g.vertex_count(), 0);
        std::vector<std::size_t> edges;
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            if (!parity[k]) continue;
            edges.push_back(k);
            degree[g.ends(k).first]++;
            degree[g.ends(k).second]++;
        }
        bool ok = std::all_of(degree.begin(), degree.end(), [](int d) { return d == 0 || d == 2; });
        if (!ok) continue;
        // Walk the support; a simple cycle visits every chosen edge in one pass.
        std::vector<bool> used(g.edge_count(), false);
        std::vector<std::size_t> walk;
        std::size_t first = edges.front();
        std::size_t start = g.ends(first).first, at = g.ends(first).second;
        walk.push_back(DualGraph::forward(first));
        used[first] = true;
        while (at != start || walk.size() < edges.size()) {
            bool moved = false;
            for (auto k : edges) {
                if (used[k]) continue;
                auto [a, b] = g.ends(k);
                if (a == at) {
                    walk.push_back(DualGraph::forward(k));
                    at = b;
                } else if (b == at) {
                    walk.push_back(DualGraph::forward(k) + 1);
                    at = a;
                } else {
                    continue;
                }
                used[k] = true;
                moved = true;
                break;
            }
            if (!moved) break;
        }
        if (walk.size() != edges.size() || at != start) continue;
        OrientedCycle cyc;
        cyc.edges = walk;
        cyc.coefficients.assign(g.edge_count(), 0);
        for (auto e : walk) cyc.coefficients[e >> 1U] += (e & 1U) ? -1 : 1;
        out.push_back(std::move(cyc));
    }
    return out;
}

ForceBound force_bound(const DualGraph& g, const ElectromotiveForce& emf, const Resistances& rho,
                       std::size_t enumeration_rank_limit) {
    ForceBound fb;
    CycleBasis basis = cycle_basis(g);
    const std::size_t rank = basis.cycles.size();
    if (rank == 0) {
        fb.enumerated = true;
        return fb;
    }
    if (rank <= enumeration_rank_limit) {
        auto loops = simple_cycles(g, basis);
        fb.enumerated = true;
        fb.simple_loops = loops.size();
        for (const auto& cyc : loops)
            fb.max_loop_force = std::max(fb.max_loop_force, std::abs(emf.evaluate(basis, cyc.coefficients)));
    } else {
        for (double v : emf.values) fb.max_loop_force = std::max(fb.max_loop_force, std::abs(v));
    }
    double min_rho = *std::min_element(rho.begin(), rho.end());
    fb.bound = static_cast<double>(rank) * fb.max_loop_force / min_rho;
    return fb;
}

}  // namespace rn
