#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace rn {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct Leg {
    std::size_t vertex = 0;
    std::string label;
};

// Oriented edges are 2k and 2k+1 for unoriented edge k; the involution is e ^ 1.
// Edge k given as (a, b): oriented 2k has target b, oriented 2k+1 has target a.
class DualGraph {
public:
    DualGraph() = default;

    static DualGraph build(std::size_t vertex_count,
                           const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                           std::vector<Leg> legs);

    static constexpr std::size_t flip(std::size_t e) { return e ^ 1U; }
    static constexpr std::size_t unoriented(std::size_t e) { return e >> 1U; }
    static constexpr std::size_t forward(std::size_t k) { return 2 * k; }

    std::size_t vertex_count() const { return vertex_count_; }
    std::size_t edge_count() const { return ends_.size(); }
    std::size_t oriented_count() const { return 2 * ends_.size(); }

    std::size_t target(std::size_t e) const;
    std::size_t source(std::size_t e) const { return target(flip(e)); }
    const std::vector<std::size_t>& incoming(std::size_t v) const { return incoming_.at(v); }
    std::pair<std::size_t, std::size_t> ends(std::size_t k) const { return ends_.at(k); }
    bool is_loop(std::size_t k) const { return ends_.at(k).first == ends_.at(k).second; }

    const std::vector<Leg>& legs() const { return legs_; }
    std::size_t leg_index(const std::string& label) const;
    std::vector<std::size_t> legs_at(std::size_t v) const;

    bool connected() const;
    std::vector<std::size_t> component_labels(std::size_t* count = nullptr) const;
    std::size_t cycle_rank() const;

private:
    std::size_t vertex_count_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> ends_;
    std::vector<std::vector<std::size_t>> incoming_;
    std::vector<Leg> legs_;
};

struct OrientedCycle {
    std::vector<std::size_t> edges;   // oriented edges, head of each is tail of the next
    std::vector<int> coefficients;    // per unoriented edge, +1 when 2k is traversed

    bool closes(const DualGraph& g) const;
};

struct CycleBasis {
    std::vector<OrientedCycle> cycles;
    std::vector<std::size_t> chords;  // non-tree edge carried by each cycle
    std::vector<bool> in_tree;
};

// BFS spanning tree from vertex 0, chords in increasing index order.
CycleBasis cycle_basis(const DualGraph& g);

// Fundamental cycles of an arbitrary spanning tree (tree_edges marks members).
CycleBasis fundamental_cycles(const DualGraph& g, const std::vector<bool>& tree_edges);

OrientedCycle cycle_from_coefficients(const DualGraph& g, const std::vector<int>& coefficients);

struct Contraction {
    DualGraph graph;
    std::vector<std::size_t> vertex_map;  // old vertex -> new vertex
    std::vector<std::size_t> edge_map;    // old unoriented edge -> new edge, npos when contracted
};

Contraction contract_edges(const DualGraph& g, const std::vector<std::size_t>& keep);

using LegFlow = std::vector<double>;

struct Subgraph {
    DualGraph graph;
    std::vector<std::size_t> vertex_origin;
    std::vector<std::size_t> edge_origin;
    std::vector<std::size_t> leg_origin;  // original leg index, npos for legs created at removed edges
    LegFlow flow;
};

// Removes the edges in `removed`; every removed oriented edge e whose target is
// retained becomes a new leg at v(e) with inflow c_e.  `edge_currents` holds c_{2k}.
std::vector<Subgraph> split_subgraph(const DualGraph& g, const LegFlow& f,
                                     const std::vector<std::size_t>& removed,
                                     const std::vector<double>& edge_currents);

}  // namespace rn
