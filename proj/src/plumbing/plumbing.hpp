#pragma once

#include <memory>
#include <string>
#include <vector>

#include "jump/jump.hpp"
#include "kirchhoff/kirchhoff.hpp"

namespace rn {

// Ψ = Φ − ω on the plumbed curve: per-component rational part plus the jump correction.
class GluedDifferential {
public:
    GluedDifferential() = default;
    GluedDifferential(std::vector<RationalDifferential> phi, CurrentAssignment c, ARNSolution omega);

    const PlumbedCurve& curve() const { return omega_.curve(); }
    const std::vector<RationalDifferential>& rational_part() const { return phi_; }
    const ARNSolution& correction() const { return omega_; }
    const CurrentAssignment& currents() const { return c_; }

    // coefficient of dz on component v; z off the seam disks
    cplx operator()(std::size_t v, cplx z) const;
    cplx derivative(std::size_t v, cplx z) const;
    // the form against d ln z_e at z_e = exp(log_radius + i·angle), stable down to the seam at any |s|
    cplx chart_density(std::size_t e, double log_radius, double angle) const;

    // max over seams of |Ψ^{v(e)} − I_e^* Ψ^{v(−e)}| against d ln z_e
    double gluing_residual(std::size_t samples = 64) const;
    double phi_seam_scale(std::size_t samples = 64) const;

private:
    std::vector<RationalDifferential> phi_;
    std::vector<RationalDifferential> regular_;  // Φ^{v(e)} without its poles at q_e, per oriented edge
    std::vector<std::vector<cplx>> node_poles_;  // removed pole coefficients a_k, per oriented edge
    CurrentAssignment c_;
    ARNSolution omega_;
};

struct PsiOptions {
    ArnOptions arn{64, true, false};
};

// Ψ(c) for currents satisfying conservation with the inflows of `marked` (bound singular parts per leg).
GluedDifferential build_psi_c(std::shared_ptr<const JumpOperator> op, const CurrentAssignment& c,
                              const std::vector<SingularPart>& marked, const PsiOptions& opts = {});
GluedDifferential build_psi_c(const PlumbedCurve& curve, const CurrentAssignment& c,
                              const std::vector<SingularPart>& marked, const PsiOptions& opts = {});
// Ω(c′): holomorphic, c′ conserved with zero inflow.
GluedDifferential build_omega_holo(std::shared_ptr<const JumpOperator> op, const CurrentAssignment& c,
                                   const PsiOptions& opts = {});

// ∫_{γ_e} with γ_e oriented as the boundary of Ĉ^{v(e)} (trapezoid rule).
cplx seam_integral(const GluedDifferential& w, std::size_t e, std::size_t samples = 256);

// A graph cycle realized on the plumbed curve. Step j runs on component target(g_j) from the seam of g_j
// to the seam of −g_{j+1}; `waypoints[j]` are optional extra points for that step.
struct CycleRealization {
    OrientedCycle cycle;
    std::vector<std::vector<cplx>> waypoints;
};

struct PathPiece {
    enum class Kind { arc, radial_out, segment, radial_in };
    Kind kind;
    std::size_t component;
    std::size_t edge;  // oriented edge whose chart is used (arc/radial), npos for segments
    cplx from, to;     // global coordinates (chart coordinates for arcs/radial legs)
    double value_im;   // Im ∫ over the piece
};

struct PeriodReport {
    OrientedCycle cycle;
    std::vector<PathPiece> path;
    cplx integral;           // ∫_{γ_s} Ψ
    double value = 0.0;      // Im ∫_{γ_s} Ψ
    double log_term = 0.0;   // Σ_j c_{e_j} ln|s_{e_j}| over crossed seams
    double finite_part = 0.0;  // value − log_term
};

struct PeriodOptions {
    double tolerance = 1e-13;   // absolute, per piece
    double clearance = 0.25;    // keep-out radius around node and marked points, in chart scales
};

PeriodReport period_im(const GluedDifferential& w, const CycleRealization& gamma, const PeriodOptions& opts = {});
PeriodReport period_im(const GluedDifferential& w, const OrientedCycle& gamma, const PeriodOptions& opts = {});
// Im ∫ along a closed polyline inside one component (must avoid seams and poles).
double closed_path_im(const GluedDifferential& w, std::size_t v, const std::vector<cplx>& polygon,
                      const PeriodOptions& opts = {});

struct RNOptions {
    PsiOptions psi;
    PeriodOptions periods;
    std::size_t max_levels = 60;
    double level_tolerance = 1e-12;
    bool direct_check = true;   // also solve the affine period equations directly
};

struct RNConstruction {
    CurrentAssignment c0;
    std::vector<CurrentAssignment> levels;    // c^{(l)}, l ≥ 1
    std::vector<double> level_norms;          // |c^{(l)}|, l ≥ 0
    std::vector<std::vector<double>> emf;     // ℰ^{(l)} on the basis cycles
    CurrentAssignment c;
    GluedDifferential psi;
    std::vector<PeriodReport> periods;        // final Im periods on the basis cycles
    CurrentAssignment c_direct;
    double direct_difference = 0.0;
    bool stagnated = false;                   // stopped at the numerical floor before level_tolerance

    double max_period() const;
};

RNConstruction rn_construct(const PlumbedCurve& curve, const std::vector<SingularPart>& marked, const RNOptions& opts = {});

// Resistances −ln|s_e| of a plumbed curve.
Resistances plumbing_resistances(const PlumbedCurve& curve);

}  // namespace rn
