#pragma once

#include <optional>
#include <vector>

#include "components/rational.hpp"
#include "graph/dual_graph.hpp"
#include "kirchhoff/kirchhoff.hpp"

namespace rn {

// Rational components of a stable curve: node point q_e on component v(e) for every oriented
// edge, affine node charts z_e = (z − q_e)/r_e, and marked points (possibly ∞).
class CurveGeometry {
public:
    // node_points[e] for oriented e; chart_scales empty (automatic) or one per oriented edge.
    static CurveGeometry build(DualGraph graph, std::vector<cplx> node_points, std::vector<SpecialPoint> marked_points,
                               std::vector<double> chart_scales = {}, std::vector<double> leg_scales = {});

    const DualGraph& graph() const { return graph_; }
    cplx node_point(std::size_t e) const { return q_.at(e); }
    double chart_scale(std::size_t e) const { return r_.at(e); }
    LocalChart node_chart(std::size_t e) const { return {SpecialPoint::finite(q_.at(e)), r_.at(e)}; }
    const SpecialPoint& marked_point(std::size_t leg) const { return p_.at(leg); }
    LocalChart marked_chart(std::size_t leg) const { return {p_.at(leg), leg_scale_.at(leg)}; }
    const std::vector<cplx>& node_points() const { return q_; }
    const std::vector<double>& chart_scales() const { return r_; }
    std::size_t component_of_edge(std::size_t e) const { return graph_.target(e); }

    cplx to_chart(std::size_t e, cplx z) const { return (z - q_[e]) / r_[e]; }
    cplx from_chart(std::size_t e, cplx t) const { return q_[e] + r_[e] * t; }

    // Copy restricted to a vertex subset; see Subcurve.
    struct Subcurve;
    Subcurve restrict_to(const std::vector<std::size_t>& vertices) const;

private:
    DualGraph graph_;
    std::vector<cplx> q_;
    std::vector<double> r_;
    std::vector<SpecialPoint> p_;
    std::vector<double> leg_scale_;
};

// Subcurve on a vertex subset: internal edges keep their charts, every edge leaving the subset
// becomes a new leg at its node point (labelled "ext:<oriented edge>").
struct CurveGeometry::Subcurve {
    CurveGeometry geometry;
    std::vector<std::size_t> vertex_origin;
    std::vector<std::size_t> edge_origin;      // unoriented edge map into the parent
    std::vector<std::size_t> leg_origin;       // parent leg, npos for external-node legs
    std::vector<std::size_t> leg_node_origin;  // parent oriented edge for external-node legs, npos otherwise
};

// Φ(c): per component, the marked singular parts plus i c_e dz_e/z_e at every node point.
// `marked` is indexed by leg; entries are ignored for legs without data (empty u).
std::vector<RationalDifferential> build_phi(const CurveGeometry& curve, const CurrentAssignment& c,
                                            const std::vector<SingularPart>& marked);

// Marked singular parts with their charts bound to the marked points (u given in the standard chart).
std::vector<SingularPart> bind_marked_parts(const CurveGeometry& curve, const std::vector<std::vector<cplx>>& u);

// Inflows f_ℓ = Im(residue) of the marked parts.
LegFlow inflows_of(const std::vector<SingularPart>& marked);

}  // namespace rn
