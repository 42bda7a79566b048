#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace rn {

using cplx = std::complex<double>;

struct SpecialPoint {
    bool at_infinity = false;
    cplx z{};

    static SpecialPoint finite(cplx z) { return {false, z}; }
    static SpecialPoint infinity() { return {true, {}}; }
};

std::string describe(const SpecialPoint& p);

// Local coordinate t = (z − center)/scale at a finite point, or t = 1/z at infinity.
struct LocalChart {
    SpecialPoint center;
    double scale = 1.0;
};

// Polar tail Σ_k u_{−k} t^{−k} dt in a local chart; u[k−1] holds u_{−k}.
struct SingularPart {
    LocalChart chart;
    std::vector<cplx> u;

    cplx residue() const { return u.empty() ? cplx{} : u[0]; }
    std::size_t order() const;  // highest k with u_{−k} != 0
};

// Coefficients u_{−1}, u_0, …, u_{m−1} of a differential in a node chart.
struct Jet {
    LocalChart chart;
    std::vector<cplx> u;  // u[0] = u_{−1}, u[j+1] = u_j

    std::size_t m() const { return u.empty() ? 0 : u.size() - 1; }
};

struct FinitePole {
    cplx p;
    std::vector<cplx> a;  // a[k−1] multiplies (z − p)^{−k} dz
};

struct DivisorPoint {
    SpecialPoint point;
    int multiplicity = 0;
};

// g(z) dz with g = Σ_poles Σ_k a_k (z − p)^{−k} + Σ_j b_j z^j.
class RationalDifferential {
public:
    RationalDifferential() = default;

    const std::vector<FinitePole>& poles() const { return poles_; }
    const std::vector<cplx>& polynomial() const { return poly_; }

    void add_pole_term(cplx p, std::size_t k, cplx a);
    void add_monomial(std::size_t j, cplx b);
    void add(const RationalDifferential& other, cplx factor = 1.0);

    bool is_zero() const;
    double coefficient_scale() const;  // max |coefficient|

    cplx operator()(cplx z) const;           // g(z)
    cplx derivative(cplx z) const;           // g'(z)
    cplx at_infinity_chart(cplx t) const;    // h(t) with ω = h(t) dt, t = 1/z

    cplx residue_sum() const;

    // Laurent coefficients in the chart: result[i] is the coefficient of t^{lowest+i} dt, up to t^{highest}.
    std::vector<cplx> laurent(const LocalChart& chart, int lowest, int highest) const;
    // Order of the pole (positive) or zero (negative) is not used; this returns ord_P ω (zeros positive).
    int order_at(const SpecialPoint& p, double rel_tol = 1e-12) const;

    // All zeros with multiplicities, including at infinity. Poles are returned via `poles_out` with positive orders.
    std::vector<DivisorPoint> zeros(std::vector<DivisorPoint>* poles_out = nullptr) const;

private:
    std::vector<DivisorPoint> zeros_scaled(cplx c, double R, bool rescale, std::vector<DivisorPoint>* poles_out) const;

    std::vector<FinitePole> poles_;
    std::vector<cplx> poly_;
};

RationalDifferential operator+(const RationalDifferential& a, const RationalDifferential& b);
RationalDifferential operator-(const RationalDifferential& a, const RationalDifferential& b);
RationalDifferential operator*(cplx s, const RationalDifferential& a);

// Unique differential on the sphere with exactly these singular parts.
RationalDifferential rn_genus0(const std::vector<SingularPart>& parts);

Jet laurent_expand(const RationalDifferential& w, const LocalChart& chart, std::size_t m);

std::vector<DivisorPoint> zeros_of(const RationalDifferential& w);

}  // namespace rn
