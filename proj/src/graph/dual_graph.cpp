#include "graph/dual_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "util/error.hpp"

namespace rn {

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

DualGraph DualGraph::build(std::size_t vertex_count,
                           const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                           std::vector<Leg> legs) {
    DualGraph g;
    g.vertex_count_ = vertex_count;
    g.incoming_.assign(vertex_count, {});
    for (std::size_t k = 0; k < edges.size(); ++k) {
        auto [a, b] = edges[k];
        if (a >= vertex_count || b >= vertex_count)
            fail(ErrorKind::invalid_argument, "graph-core/build_graph",
                 "edge " + std::to_string(k) + " has a vertex index out of range");
        g.ends_.emplace_back(a, b);
        g.incoming_[b].push_back(forward(k));
        g.incoming_[a].push_back(forward(k) + 1);
    }
    std::set<std::string> labels;
    for (const auto& leg : legs) {
        if (leg.vertex >= vertex_count)
            fail(ErrorKind::invalid_argument, "graph-core/build_graph",
                 "leg '" + leg.label + "' has a vertex index out of range");
        if (!labels.insert(leg.label).second)
            fail(ErrorKind::invalid_argument, "graph-core/build_graph",
                 "duplicate leg label '" + leg.label + "'");
    }
    g.legs_ = std::move(legs);
    return g;
}

std::size_t DualGraph::target(std::size_t e) const {
    const auto& [a, b] = ends_.at(unoriented(e));
    return (e & 1U) ? a : b;
}

std::size_t DualGraph::leg_index(const std::string& label) const {
    for (std::size_t i = 0; i < legs_.size(); ++i)
        if (legs_[i].label == label) return i;
    return npos;
}

std::vector<std::size_t> DualGraph::legs_at(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < legs_.size(); ++i)
        if (legs_[i].vertex == v) out.push_back(i);
    return out;
}

std::vector<std::size_t> DualGraph::component_labels(std::size_t* count) const {
    UnionFind uf(vertex_count_);
    for (const auto& [a, b] : ends_) uf.unite(a, b);
    std::vector<std::size_t> label(vertex_count_, npos);
    std::size_t next = 0;
    for (std::size_t v = 0; v < vertex_count_; ++v) {
        std::size_t r = uf.find(v);
        if (label[r] == npos) label[r] = next++;
        label[v] = label[r];
    }
    if (count) *count = next;
    return label;
}

bool DualGraph::connected() const {
    if (vertex_count_ == 0) return false;
    std::size_t count = 0;
    component_labels(&count);
    return count == 1;
}

std::size_t DualGraph::cycle_rank() const {
    std::size_t count = 0;
    component_labels(&count);
    return edge_count() + count - vertex_count_;
}

bool OrientedCycle::closes(const DualGraph& g) const {
    if (edges.empty()) return false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        std::size_t next = edges[(i + 1) % edges.size()];
        if (g.target(edges[i]) != g.source(next)) return false;
    }
    return true;
}

namespace {

std::vector<int> coefficients_of(const DualGraph& g, const std::vector<std::size_t>& edges) {
    std::vector<int> c(g.edge_count(), 0);
    for (auto e : edges) c[DualGraph::unoriented(e)] += (e & 1U) ? -1 : 1;
    return c;
}

// Oriented tree path from `from` to `to`, using parent pointers rooted anywhere.
std::vector<std::size_t> tree_path(const DualGraph& g, const std::vector<std::size_t>& parent_edge,
                                   const std::vector<std::size_t>& depth, std::size_t from,
                                   std::size_t to) {
    std::vector<std::size_t> up;    // edges walked from `from` toward the root
    std::vector<std::size_t> down;  // edges walked from the root toward `to`, reversed
    std::size_t a = from, b = to;
    while (a != b) {
        if (depth[a] >= depth[b]) {
            std::size_t e = parent_edge[a];  // oriented with target a
            up.push_back(DualGraph::flip(e));
            a = g.source(e);
        } else {
            std::size_t e = parent_edge[b];
            down.push_back(e);
            b = g.source(e);
        }
    }
    std::reverse(down.begin(), down.end());
    up.insert(up.end(), down.begin(), down.end());
    return up;
}

CycleBasis cycles_from_tree(const DualGraph& g, const std::vector<bool>& in_tree) {
    const std::size_t n = g.vertex_count();
    std::vector<std::size_t> parent_edge(n, npos), depth(n, 0);
    std::vector<bool> seen(n, false);
    for (std::size_t root = 0; root < n; ++root) {
        if (seen[root]) continue;
        std::queue<std::size_t> q;
        q.push(root);
        seen[root] = true;
        while (!q.empty()) {
            std::size_t v = q.front();
            q.pop();
            for (std::size_t k = 0; k < g.edge_count(); ++k) {
                if (!in_tree[k]) continue;
                auto [a, b] = g.ends(k);
                std::size_t e = npos;
                if (a == v && !seen[b]) e = DualGraph::forward(k);
                else if (b == v && !seen[a]) e = DualGraph::forward(k) + 1;
                if (e == npos) continue;
                std::size_t w = g.target(e);
                seen[w] = true;
                parent_edge[w] = e;
                depth[w] = depth[v] + 1;
                q.push(w);
            }
        }
    }
    CycleBasis basis;
    basis.in_tree = in_tree;
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        if (in_tree[k]) continue;
        OrientedCycle cyc;
        std::size_t e = DualGraph::forward(k);
        cyc.edges.push_back(e);
        auto path = tree_path(g, parent_edge, depth, g.target(e), g.source(e));
        cyc.edges.insert(cyc.edges.end(), path.begin(), path.end());
        cyc.coefficients = coefficients_of(g, cyc.edges);
        basis.cycles.push_back(std::move(cyc));
        basis.chords.push_back(k);
    }
    return basis;
}

}  // namespace

CycleBasis cycle_basis(const DualGraph& g) {
    if (!g.connected()) fail(ErrorKind::invalid_argument, "graph-core/cycle_basis", "graph is disconnected");
    std::vector<bool> in_tree(g.edge_count(), false);
    std::vector<bool> seen(g.vertex_count(), false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    while (!q.empty()) {
        std::size_t v = q.front();
        q.pop();
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            auto [a, b] = g.ends(k);
            std::size_t w = npos;
            if (a == v && !seen[b]) w = b;
            else if (b == v && !seen[a]) w = a;
            if (w == npos) continue;
            seen[w] = true;
            in_tree[k] = true;
            q.push(w);
        }
    }
    return cycles_from_tree(g, in_tree);
}

CycleBasis fundamental_cycles(const DualGraph& g, const std::vector<bool>& tree_edges) {
    return cycles_from_tree(g, tree_edges);
}

OrientedCycle cycle_from_coefficients(const DualGraph& g, const std::vector<int>& coefficients) {
    // Only simple cycles (every coefficient in {-1,0,1}, each vertex balanced) are supported.
    std::vector<std::size_t> pool;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
        if (coefficients[k] == 1) pool.push_back(DualGraph::forward(k));
        else if (coefficients[k] == -1) pool.push_back(DualGraph::forward(k) + 1);
        else if (coefficients[k] != 0)
            fail(ErrorKind::invalid_argument, "graph-core/cycle_from_coefficients", "coefficient outside {-1,0,1}");
    }
    OrientedCycle cyc;
    if (pool.empty()) return cyc;
    std::vector<bool> used(pool.size(), false);
    cyc.edges.push_back(pool[0]);
    used[0] = true;
    for (std::size_t step = 1; step < pool.size(); ++step) {
        std::size_t head = g.target(cyc.edges.back());
        bool found = false;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i] || g.source(pool[i]) != head) continue;
            used[i] = true;
            cyc.edges.push_back(pool[i]);
            found = true;
            break;
        }
        if (!found) fail(ErrorKind::invalid_argument, "graph-core/cycle_from_coefficients", "coefficients do not form a closed walk");
    }
    if (!cyc.closes(g)) fail(ErrorKind::invalid_argument, "graph-core/cycle_from_coefficients", "walk does not close");
    cyc.coefficients = coefficients;
    return cyc;
}

Contraction contract_edges(const DualGraph& g, const std::vector<std::size_t>& keep) {
    if (keep.empty()) fail(ErrorKind::invalid_argument, "graph-core/contract_edges", "empty keep-set");
    std::vector<bool> kept(g.edge_count(), false);
    for (auto k : keep) {
        if (k >= g.edge_count()) fail(ErrorKind::invalid_argument, "graph-core/contract_edges", "edge index out of range");
        kept[k] = true;
    }
    UnionFind uf(g.vertex_count());
    for (std::size_t k = 0; k < g.edge_count(); ++k)
        if (!kept[k]) uf.unite(g.ends(k).first, g.ends(k).second);
    Contraction out;
    out.vertex_map.assign(g.vertex_count(), npos);
    std::vector<std::size_t> rep_label(g.vertex_count(), npos);
    std::size_t next = 0;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        std::size_t r = uf.find(v);
        if (rep_label[r] == npos) rep_label[r] = next++;
        out.vertex_map[v] = rep_label[r];
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    out.edge_map.assign(g.edge_count(), npos);
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        if (!kept[k]) continue;
        out.edge_map[k] = edges.size();
        edges.emplace_back(out.vertex_map[g.ends(k).first], out.vertex_map[g.ends(k).second]);
    }
    std::vector<Leg> legs = g.legs();
    for (auto& leg : legs) leg.vertex = out.vertex_map[leg.vertex];
    out.graph = DualGraph::build(next, edges, std::move(legs));
    return out;
}

std::vector<Subgraph> split_subgraph(const DualGraph& g, const LegFlow& f,
                                     const std::vector<std::size_t>& removed,
                                     const std::vector<double>& edge_currents) {
    if (f.size() != g.legs().size())
        fail(ErrorKind::invalid_argument, "graph-core/split_subgraph", "leg flow size mismatch");
    std::vector<bool> is_removed(g.edge_count(), false);
    for (auto k : removed) {
        if (k >= g.edge_count()) fail(ErrorKind::invalid_argument, "graph-core/split_subgraph", "edge index out of range");
        is_removed[k] = true;
    }
    if (edge_currents.size() != g.edge_count())
        fail(ErrorKind::invalid_argument, "graph-core/split_subgraph", "boundary inflows must be given per edge");

    UnionFind uf(g.vertex_count());
    for (std::size_t k = 0; k < g.edge_count(); ++k)
        if (!is_removed[k]) uf.unite(g.ends(k).first, g.ends(k).second);

    std::vector<std::size_t> comp_of(g.vertex_count(), npos);
    std::vector<Subgraph> parts;
    std::vector<std::size_t> local(g.vertex_count(), npos);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        std::size_t r = uf.find(v);
        if (comp_of[r] == npos) {
            comp_of[r] = parts.size();
            parts.emplace_back();
        }
        comp_of[v] = comp_of[r];
        local[v] = parts[comp_of[v]].vertex_origin.size();
        parts[comp_of[v]].vertex_origin.push_back(v);
    }

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges(parts.size());
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        if (is_removed[k]) continue;
        auto [a, b] = g.ends(k);
        std::size_t p = comp_of[a];
        edges[p].emplace_back(local[a], local[b]);
        parts[p].edge_origin.push_back(k);
    }
    std::vector<std::vector<Leg>> legs(parts.size());
    for (std::size_t i = 0; i < g.legs().size(); ++i) {
        const auto& leg = g.legs()[i];
        std::size_t p = comp_of[leg.vertex];
        legs[p].push_back({local[leg.vertex], leg.label});
        parts[p].leg_origin.push_back(i);
        parts[p].flow.push_back(f[i]);
    }
    std::set<std::string> taken;
    for (const auto& leg : g.legs()) taken.insert(leg.label);
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        if (!is_removed[k]) continue;
        for (std::size_t e : {DualGraph::forward(k), DualGraph::forward(k) + 1}) {
            std::size_t v = g.target(e);
            std::size_t p = comp_of[v];
            double c = (e & 1U) ? -edge_currents[k] : edge_currents[k];
            std::string label = "node:" + std::to_string(k) + ((e & 1U) ? ":a" : ":b");
            while (taken.count(label)) label += "'";
            taken.insert(label);
            legs[p].push_back({local[v], label});
            parts[p].leg_origin.push_back(npos);
            parts[p].flow.push_back(c);
        }
    }
    for (std::size_t p = 0; p < parts.size(); ++p) {
        double sum = 0.0, scale = 1.0;
        for (double x : parts[p].flow) {
            sum += x;
            scale += std::abs(x);
        }
        if (std::abs(sum) > 1e-10 * scale)
            fail(ErrorKind::numerical, "graph-core/split_subgraph",
                 "inflow zero-sum violated on a retained component (residual " + std::to_string(sum) + ")");
        parts[p].graph = DualGraph::build(parts[p].vertex_origin.size(), edges[p], std::move(legs[p]));
    }
    return parts;
}

}  // namespace rn
