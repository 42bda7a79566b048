#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "blowup/blowup.hpp"
#include "plumbing/plumbing.hpp"
#include "util/fit.hpp"

namespace rn {

// Fixed rational components plumbed with s_e(k) = exp(−ρ_e(k) + i·arg_e).
struct DegeneratingFamily {
    CurveGeometry geometry;
    ResistanceSchedule schedule;
    std::vector<double> arg;           // per edge; empty means 0
    std::vector<SingularPart> marked;  // bound to the marked charts, one per leg
    std::vector<double> k_grid;        // strictly increasing

    void validate() const;
    PlumbedCurve curve_at(double k) const;
    BlowupPoint blowup_point() const;
    // −ln max_e |s_e(k)|
    double log_inverse_s(double k) const;
};

std::size_t arithmetic_genus(const DualGraph& g);
// m₀ = 2g − 2 + Σ_ℓ (m_ℓ + 1), with m_ℓ + 1 the pole order of the marked part
int zero_budget(const DualGraph& g, const std::vector<SingularPart>& marked);

// Ψ_k for every grid point
std::vector<RNConstruction> solve_family(const DegeneratingFamily& fam, const RNOptions& opts = {});

struct LimitRow {
    double k = 0.0;
    CurrentAssignment c;
    std::vector<cplx> residues;  // per unoriented edge: residue of Ψ_k at q_{2k}, from the seam integral
    double deviation = 0.0;      // max |residue − i c_limit|
};

struct LimitReport {
    BlowupPoint point;
    CurrentAssignment c_limit;
    std::vector<RationalDifferential> phi;  // Φ(c_limit) per component
    std::vector<LimitRow> rows;
    double final_deviation = 0.0;
    bool monotone_tail = false;  // deviation non-increasing after the first third of the grid
};

LimitReport limit_rn(const DegeneratingFamily& fam, const RNOptions& opts = {});
LimitReport limit_rn(const DegeneratingFamily& fam, const std::vector<RNConstruction>& grid);

// I_{−e}^* of the jet: coefficient of z_{−e}^{−j−2} is −s^{j+1} u_j.
SingularPart balancing_singular_part(const Jet& j, cplx s, const LocalChart& target = {});

struct DegenOptions {
    RNOptions rn;
    std::size_t m = 0;              // jet order; 0 selects 2m₀ + 1
    double stabilization = 1e-3;    // per normalized coefficient over the last three grid points
    double decay_power = 0.5;       // coefficients falling at least like |s|^p extrapolate to 0
    double order_tolerance = 1e-7;
    double jet_radius = 0.5;        // contour radius in chart units for jets
    std::size_t jet_samples = 128;
};

struct StratumStep {
    std::vector<std::size_t> vertices;       // C^(λ)
    std::vector<double> log_mu;              // ln μ_k^(λ) per grid point
    LineFit mu_fit;                          // ln μ against −ln max|s|
    std::vector<RationalDifferential> phi;   // Φ^(λ) on every component; zero off C^(λ)
    std::vector<std::size_t> boundary;       // E^(λ): oriented e with q_e in C^(≤λ), q_{−e} outside
    std::vector<Jet> jets;                   // μ^(λ(e))-scaled jets at the boundary, k_max
    std::vector<int> boundary_orders;        // m_e = ord_{q_e} of the twisted piece on v(e)
    bool stabilized = true;
    double stabilization_defect = 0.0;
    double scaled_consistency = 0.0;         // relative max |μΨ_k − μΨ_k^(≤λ)| on C^(λ) probes at k_max
};

struct Stratification {
    CurveGeometry geometry;
    std::vector<SingularPart> marked;
    std::size_t m = 0;
    int m0 = 0;
    std::vector<StratumStep> strata;
    std::vector<std::size_t> level_of;  // stratum per component
    bool jet_convergent = true;

    // twisted piece on v, normalized per stratum
    const RationalDifferential& piece(std::size_t v) const { return strata.at(level_of.at(v)).phi.at(v); }
    double separation_slope(std::size_t lambda) const;  // slope(μ^(λ)) − slope(μ^(λ−1))
};

Stratification stratify(const DegeneratingFamily& fam, const DegenOptions& opts = {});
Stratification stratify(const DegeneratingFamily& fam, const std::vector<RNConstruction>& grid,
                        const DegenOptions& opts = {});

struct NodeMultiplicity {
    std::size_t edge = 0;  // unoriented
    int ord_forward = 0;   // ord at q_{2k}
    int ord_backward = 0;  // ord at q_{2k+1}
    int multiplicity = 0;
};

struct ComponentZero {
    std::size_t component = 0;
    SpecialPoint point;
    int multiplicity = 0;
};

struct TwistedLimitDifferential {
    std::vector<RationalDifferential> phi;
    std::vector<std::size_t> stratum;
    std::vector<ComponentZero> zeros;        // away from node and marked points
    std::vector<NodeMultiplicity> nodes;
    std::vector<int> marked_multiplicity;    // m_ℓ + 1 + ord_{p_ℓ}
    int degree = 0;
    int expected_degree = 0;
    bool nonnegative = true;
};

// ord_P of a differential, by the first Laurent coefficient above `tol` after normalization; capped at `highest`.
int order_at(const RationalDifferential& w, const LocalChart& chart, int lowest, int highest, double tol);

TwistedLimitDifferential twisted_limit(const Stratification& strat, double order_tolerance = 1e-7);

struct ZeroOptions {
    std::vector<double> radii{0.5, 0.45, 0.55, 0.4, 0.6};  // annulus boundary |z_e| = R, tried in turn
    double contour_clearance = 1e-6;                        // min |density| / max |density| on a contour
    std::size_t samples = 512;
    double prune = 1e-15;                                   // relative cutoff for seed tails
};

struct AnnulusCount {
    std::size_t edge = 0;  // unoriented
    double radius = 0.0;
    int winding_forward = 0;
    int winding_backward = 0;
    int count = 0;
};

struct ZeroTrack {
    std::vector<ComponentZero> zeros;      // located zeros off the annuli
    std::vector<int> component_counts;     // argument-principle counts off the annuli
    std::vector<AnnulusCount> annuli;
    int total = 0;
    int expected = 0;
    bool consistent = true;                // located multiplicities match component_counts
};

ZeroTrack track_zeros(const GluedDifferential& w, const std::vector<SingularPart>& marked, const ZeroOptions& opts = {});

struct BalancedOptions {
    std::size_t m = 4;
    RNOptions rn;
    std::size_t max_levels = 200;
    double tolerance = 1e-16;   // relative level norm stopping rule
    bool direct_check = true;
};

struct BalancedApproximation {
    std::size_t m = 0;
    CurrentAssignment c;
    std::vector<RationalDifferential> phi;                // Φ[m] per component
    std::vector<std::vector<RationalDifferential>> levels;  // Φ^(l) per component, l ≥ 0
    std::vector<double> level_norms;                      // max singular-part coefficient of Φ^(l)
    double fitted_m = 0.0;                                // max ‖Φ^(l+1)‖ / (|s|‖Φ^(l)‖), l ≥ 1
    double balancing_residual = 0.0;
    double direct_difference = 0.0;
};

BalancedApproximation balanced_approximation(const PlumbedCurve& curve, const std::vector<SingularPart>& marked,
                                             const BalancedOptions& opts = {});
BalancedApproximation balanced_approximation(const PlumbedCurve& curve, const std::vector<SingularPart>& marked,
                                             const CurrentAssignment& c, const BalancedOptions& opts);

// max |Ψ − Φ[m]| over probe circles |z_e| = 0.6 and |z_ℓ| = 0.6 on every component
double approximation_error(const GluedDifferential& psi, const BalancedApproximation& a);
// max |Ψ − Φ[m]| against d ln z_e on the seams |z_e| = √|s_e|
double seam_approximation_error(const GluedDifferential& psi, const BalancedApproximation& a, std::size_t samples = 64);

// Probe points on component v: circles of 0.6 chart scales around node and finite marked points.
std::vector<cplx> probe_points(const CurveGeometry& g, std::size_t v, std::size_t per_circle = 8);

}  // namespace rn
