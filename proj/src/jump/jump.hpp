#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "components/geometry.hpp"

namespace rn {

// Rational components glued along seams |z_e| = √|s_e|, z_{−e} = s_e / z_e.
// |s_e| is held as −ln|s_e| so families far past double underflow stay representable.
struct PlumbedCurve {
    CurveGeometry geometry;
    std::vector<double> log_modulus;  // −ln|s_e| > 0, per unoriented edge
    std::vector<double> arg;          // arg s_e

    static PlumbedCurve from_s(CurveGeometry g, const std::vector<cplx>& s);
    static PlumbedCurve from_log(CurveGeometry g, std::vector<double> log_modulus, std::vector<double> arg = {});

    const DualGraph& graph() const { return geometry.graph(); }
    double rho(std::size_t e) const;              // seam radius √|s| in the chart z_e
    double log_rho(std::size_t e) const { return -0.5 * log_modulus.at(e >> 1U); }
    double log_abs_s(std::size_t e) const { return -log_modulus.at(e >> 1U); }
    cplx sigma(std::size_t e) const;              // s/|s|
    cplx s(std::size_t e) const;                  // may underflow to 0
    double max_abs_s() const;
};

// Per oriented edge, modes −N..N of a 1-form on γ_e written as Σ a_n (z_e/ρ_e)^n dz_e/z_e.
struct SeamFunction {
    std::size_t N = 0;
    std::vector<std::vector<cplx>> modes;

    SeamFunction() = default;
    SeamFunction(std::size_t oriented_edges, std::size_t n) : N(n), modes(oriented_edges, std::vector<cplx>(2 * n + 1)) {}

    cplx& at(std::size_t e, int n) { return modes[e][static_cast<std::size_t>(n + static_cast<int>(N))]; }
    cplx at(std::size_t e, int n) const { return modes[e][static_cast<std::size_t>(n + static_cast<int>(N))]; }
    cplx value(std::size_t e, double theta) const;  // density against d ln z_e at z_e = ρ e^{iθ}
    double sup_norm(std::size_t samples = 0) const;  // max_e sup_θ |density|
    double max_compatibility_defect(const PlumbedCurve& c) const;  // max |a_e[−n] − σ^n a_{−e}[n]|
};

// Modes of f (holomorphic near γ_e) on γ_e, indices −N..N.
std::vector<cplx> seam_restrict(const PlumbedCurve& c, const RationalDifferential& f, std::size_t e, std::size_t N);

// I_e^*: modes on γ_{−e} to modes on γ_e (mode n → mode −n, factor −σ^n).
std::vector<cplx> pull_back(const PlumbedCurve& c, std::size_t e, const std::vector<cplx>& modes_on_minus_e);

// φ_e = f_e − I_e^* f_{−e} from one differential per component.
SeamFunction jump_data(const PlumbedCurve& c, const std::vector<RationalDifferential>& per_component, std::size_t N);

struct ArnOptions {
    std::size_t modes = 64;
    bool neumann = true;          // run the series and record term norms
    bool cross_check = true;      // also solve densely and compare
    double abort_ratio = 0.9;
    std::size_t max_terms = 400;
};

class JumpOperator;

struct ARNSolution {
    std::shared_ptr<const JumpOperator> op;
    SeamFunction phi;
    SeamFunction psi;                      // solved seam densities
    std::vector<double> term_norms;        // |ψ^{(l)}| of the Neumann series
    double observed_ratio = 0.0;           // tail ratio of consecutive term norms
    double direct_vs_series = 0.0;         // max mode difference, when both were computed

    const PlumbedCurve& curve() const;
    // ω on component v at z (coefficient of dz); z must lie off the seam disks
    cplx operator()(std::size_t v, cplx z) const;
    cplx derivative(std::size_t v, cplx z) const;
    // same sum leaving out the tail of seam `skip`
    cplx value_without(std::size_t v, cplx z, std::size_t skip) const;
    // own tail of seam e against d ln z_e, at the chart point z_e = ρ_e·x
    cplx tail_density(std::size_t e, cplx x) const;
    // modes of ω^{v(e)} on γ_e: own tail (negative) plus the other seams (positive)
    std::vector<cplx> outer_modes(std::size_t e) const;
    // ω^v as a rational differential (poles of order ≤ N+1 at the node points)
    RationalDifferential as_rational(std::size_t v) const;
};

class JumpOperator {
public:
    JumpOperator(PlumbedCurve curve, std::size_t modes);

    const PlumbedCurve& curve() const { return curve_; }
    std::size_t modes() const { return N_; }
    std::size_t dimension() const { return static_cast<std::size_t>(K_.rows()); }

    Eigen::VectorXcd pack(const SeamFunction& f) const;
    SeamFunction unpack(const Eigen::VectorXcd& x) const;
    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const { return K_ * x; }
    Eigen::VectorXcd solve_direct(const Eigen::VectorXcd& rhs) const;
    // positive modes 1..N of Σ_{e'≠e on v(e)} tails of ψ_{e'} on γ_e
    std::vector<cplx> smooth_part(const SeamFunction& psi, std::size_t e) const;

private:
    std::size_t index(std::size_t e, int n) const;

    PlumbedCurve curve_;
    std::size_t N_;
    Eigen::MatrixXcd K_;
    // coupling[e][e'] (k−1, j) = entry from tail mode −k of e' to mode j+1 on γ_e
    std::vector<std::vector<Eigen::MatrixXcd>> coupling_;
    mutable std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
};

ARNSolution solve_arn(const PlumbedCurve& curve, const SeamFunction& phi, const ArnOptions& opts = {});
ARNSolution solve_arn(std::shared_ptr<const JumpOperator> op, const SeamFunction& phi, const ArnOptions& opts = {});

enum class SeamSide { outer, inner };
// outer: ω^{v(e)} on γ_e; inner: I_e^*(ω^{v(−e)} on γ_{−e}). outer − inner = φ_e.
std::vector<cplx> sokhotski_boundary(const ARNSolution& w, std::size_t e, SeamSide side);
// Principal value of the Cauchy transform of ψ on γ_e plus the smooth contribution of the other seams.
std::vector<cplx> principal_value(const ARNSolution& w, std::size_t e);

double arn_l2_norm(const ARNSolution& w, std::size_t v);
// max over seams and sample points of |ω^{v(e)} − I_e^* ω^{v(−e)} − φ_e|, evaluating ω pointwise
double jump_residual(const ARNSolution& w, std::size_t samples = 64);

}  // namespace rn
