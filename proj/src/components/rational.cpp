#include "components/rational.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "util/error.hpp"

namespace rn {

namespace {

cplx ipow(cplx z, int n) {
    cplx r = 1.0;
    cplx b = n < 0 ? 1.0 / z : z;
    for (int m = n < 0 ? -n : n; m > 0; m >>= 1) {
        if (m & 1) r *= b;
        b *= b;
    }
    return r;
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::string describe(const SpecialPoint& p) {
    if (p.at_infinity) return "inf";
    return "(" + std::to_string(p.z.real()) + ", " + std::to_string(p.z.imag()) + ")";
}

std::size_t SingularPart::order() const {
    for (std::size_t k = u.size(); k > 0; --k)
        if (u[k - 1] != cplx{}) return k;
    return 0;
}

void RationalDifferential::add_pole_term(cplx p, std::size_t k, cplx a) {
    if (k == 0) fail(ErrorKind::invalid_argument, "riemann-components/add_pole_term", "pole order must be >= 1");
    auto it = std::find_if(poles_.begin(), poles_.end(), [&](const FinitePole& fp) { return fp.p == p; });
    if (it == poles_.end()) {
        poles_.push_back({p, {}});
        it = poles_.end() - 1;
    }
    if (it->a.size() < k) it->a.resize(k);
    it->a[k - 1] += a;
}

void RationalDifferential::add_monomial(std::size_t j, cplx b) {
    if (poly_.size() <= j) poly_.resize(j + 1);
    poly_[j] += b;
}

void RationalDifferential::add(const RationalDifferential& other, cplx factor) {
    for (const auto& fp : other.poles_)
        for (std::size_t k = 0; k < fp.a.size(); ++k) add_pole_term(fp.p, k + 1, factor * fp.a[k]);
    for (std::size_t j = 0; j < other.poly_.size(); ++j) add_monomial(j, factor * other.poly_[j]);
}

double RationalDifferential::coefficient_scale() const {
    double s = 0.0;
    for (const auto& fp : poles_)
        for (auto a : fp.a) s = std::max(s, std::abs(a));
    for (auto b : poly_) s = std::max(s, std::abs(b));
    return s;
}

bool RationalDifferential::is_zero() const { return coefficient_scale() == 0.0; }

cplx RationalDifferential::operator()(cplx z) const {
    cplx g{};
    for (const auto& fp : poles_) {
        cplx inv = 1.0 / (z - fp.p), pw = inv;
        for (auto a : fp.a) {
            g += a * pw;
            pw *= inv;
        }
    }
    cplx h{};
    for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) h = h * z + *it;
    return g + h;
}

cplx RationalDifferential::derivative(cplx z) const {
    cplx g{};
    for (const auto& fp : poles_) {
        cplx inv = 1.0 / (z - fp.p), pw = inv * inv;
        for (std::size_t k = 0; k < fp.a.size(); ++k) {
            g -= static_cast<double>(k + 1) * fp.a[k] * pw;
            pw *= inv;
        }
    }
    cplx h{};
    for (std::size_t j = poly_.size(); j > 1; --j) h = h * z + static_cast<double>(j - 1) * poly_[j - 1];
    return g + h;
}

cplx RationalDifferential::at_infinity_chart(cplx t) const {
    // g(1/t)·d(1/t) with every pole and monomial expanded around t = 0 to stay finite at t = 0.
    cplx h{};
    for (const auto& fp : poles_) {
        cplx base = t / (1.0 - fp.p * t);  // (1/t − p)^{−1}
        cplx pw = base;
        for (std::size_t k = 0; k < fp.a.size(); ++k) {
            // (z−p)^{−k} dz = −base^k t^{−2} dt; for k = 1 this is a simple pole at t = 0
            h -= fp.a[k] * pw / (t * t);
            pw *= base;
        }
    }
    for (std::size_t j = 0; j < poly_.size(); ++j) h -= poly_[j] * ipow(t, -static_cast<int>(j) - 2);
    return h;
}

cplx RationalDifferential::residue_sum() const {
    cplx s{};
    for (const auto& fp : poles_)
        if (!fp.a.empty()) s += fp.a[0];
    return s;
}


std::vector<cplx> RationalDifferential::laurent(const LocalChart& chart, int lowest, int highest) const {
    if (highest < lowest) return {};
    std::vector<cplx> c(static_cast<std::size_t>(highest - lowest + 1), cplx{});
    auto slot = [&](int n) -> cplx* {
        if (n < lowest || n > highest) return nullptr;
        return &c[static_cast<std::size_t>(n - lowest)];
    };
    if (!chart.center.at_infinity) {
        const cplx q = chart.center.z;
        for (const auto& fp : poles_) {
            if (fp.p == q) {
                for (std::size_t k = 0; k < fp.a.size(); ++k)
                    if (auto* s = slot(-static_cast<int>(k) - 1)) *s += fp.a[k];
                continue;
            }
            const cplx d = fp.p - q;
            for (std::size_t k = 1; k <= fp.a.size(); ++k) {
                if (fp.a[k - 1] == cplx{}) continue;
                cplx term = fp.a[k - 1] * ipow(-d, -static_cast<int>(k));
                for (int n = 0; n <= highest; ++n) {
                    if (auto* s = slot(n)) *s += term;
                    term *= static_cast<double>(n + static_cast<int>(k)) / static_cast<double>(n + 1) / d;
                }
            }
        }
        for (std::size_t j = 0; j < poly_.size(); ++j) {
            if (poly_[j] == cplx{}) continue;
            for (int i = 0; i <= static_cast<int>(j); ++i)
                if (auto* s = slot(i)) *s += poly_[j] * binom(static_cast<int>(j), i) * ipow(q, static_cast<int>(j) - i);
        }
        // Chart t = w/r: coefficient of w^n dw becomes r^{n+1} for t^n dt.
        for (int n = lowest; n <= highest; ++n) *slot(n) *= ipow(chart.scale, n + 1);
        return c;
    }
    for (const auto& fp : poles_) {
        for (std::size_t k = 1; k <= fp.a.size(); ++k) {
            if (fp.a[k - 1] == cplx{}) continue;
            cplx term = -fp.a[k - 1];
            for (int n = 0;; ++n) {
                int power = n + static_cast<int>(k) - 2;
                if (power > highest) break;
                if (auto* s = slot(power)) *s += term * binom(n + static_cast<int>(k) - 1, static_cast<int>(k) - 1);
                term *= fp.p;
                if (fp.p == cplx{}) break;
            }
        }
    }
    for (std::size_t j = 0; j < poly_.size(); ++j)
        if (auto* s = slot(-static_cast<int>(j) - 2)) *s -= poly_[j];
    return c;
}

namespace {

using Poly = std::vector<cplx>;  // lowest degree first

Poly multiply(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, cplx{});
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Poly power_of_linear(cplx p, std::size_t k) {
    Poly r{1.0};
    for (std::size_t i = 0; i < k; ++i) r = multiply(r, {-p, 1.0});
    return r;
}

void accumulate(Poly& into, const Poly& add, cplx factor) {
    if (into.size() < add.size()) into.resize(add.size());
    for (std::size_t i = 0; i < add.size(); ++i) into[i] += factor * add[i];
}

std::vector<cplx> roots(Poly p) {
    while (!p.empty() && p.back() == cplx{}) p.pop_back();
    const std::size_t n = p.empty() ? 0 : p.size() - 1;
    if (n == 0) return {};
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < n; ++i) C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -p[i] / p[n];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    if (es.info() != Eigen::Success) fail(ErrorKind::numerical, "riemann-components/zeros_of", "companion eigenvalue solve failed");
    std::vector<cplx> out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

}  // namespace

std::vector<DivisorPoint> RationalDifferential::zeros(std::vector<DivisorPoint>* poles_out) const {
    constexpr const char* where = "riemann-components/zeros_of";
    if (is_zero()) fail(ErrorKind::invalid_argument, where, "zero differential has no divisor");
    // Work in x = (z − c)/R so the poles sit near the unit disk; the monomial basis is then well scaled.
    cplx c{};
    double R = 0.0;
    std::size_t pole_count = 0;
    for (const auto& fp : poles_) {
        c += fp.p;
        ++pole_count;
    }
    if (pole_count) c /= static_cast<double>(pole_count);
    for (const auto& fp : poles_) R = std::max(R, std::abs(fp.p - c));
    const bool unit_scale = R == 0.0;
    if (unit_scale) R = 1.0;
    return zeros_scaled(c, R, unit_scale, poles_out);
}

std::vector<DivisorPoint> RationalDifferential::zeros_scaled(cplx c, double R, bool rescale,
                                                             std::vector<DivisorPoint>* poles_out) const {
    constexpr const char* where = "riemann-components/zeros_of";
    std::vector<std::pair<cplx, std::size_t>> orders;
    std::vector<const FinitePole*> source;
    for (const auto& fp : poles_) {
        std::size_t k = fp.a.size();
        while (k > 0 && fp.a[k - 1] == cplx{}) --k;
        if (k > 0) {
            orders.emplace_back((fp.p - c) / R, k);
            source.push_back(&fp);
        }
    }
    Poly D{1.0};
    for (const auto& [p, k] : orders) D = multiply(D, power_of_linear(p, k));
    Poly N;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        Poly others{1.0};
        for (std::size_t j = 0; j < orders.size(); ++j)
            if (j != i) others = multiply(others, power_of_linear(orders[j].first, orders[j].second));
        for (std::size_t k = 1; k <= orders[i].second; ++k)
            accumulate(N, multiply(power_of_linear(orders[i].first, orders[i].second - k), others),
                       source[i]->a[k - 1] * ipow(R, -static_cast<int>(k)));
    }
    Poly shifted;  // Σ b_j (c + R x)^j
    for (std::size_t j = 0; j < poly_.size(); ++j) {
        if (poly_[j] == cplx{}) continue;
        Poly term{poly_[j]};
        for (std::size_t i = 0; i < j; ++i) term = multiply(term, {c, R});
        accumulate(shifted, term, 1.0);
    }
    accumulate(N, multiply(shifted, D), 1.0);
    double top = 0.0;
    for (auto x : N) top = std::max(top, std::abs(x));
    if (top == 0.0) fail(ErrorKind::invalid_argument, where, "zero differential has no divisor");
    while (!N.empty() && std::abs(N.back()) <= 1e-12 * top) N.pop_back();

    std::vector<cplx> rs = roots(N);
    if (rescale && !rs.empty()) {
        // poles all at c: measure the root spread so clustering is relative to it
        double spread = 0.0;
        for (auto x : rs) spread = std::max(spread, std::abs(x));
        if (spread > 0.0 && (spread < 1e-3 || spread > 1e3)) return zeros_scaled(c, R * spread, false, poles_out);
    }
    for (auto& x : rs) x = c + R * x;
    std::vector<DivisorPoint> out;
    std::vector<bool> used(rs.size(), false);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        if (used[i]) continue;
        std::vector<cplx> cluster{rs[i]};
        used[i] = true;
        for (std::size_t j = i + 1; j < rs.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(rs[j] - rs[i]) <= 1e-5 * (R + std::abs(rs[i]))) {
                cluster.push_back(rs[j]);
                used[j] = true;
            }
        }
        cplx z{};
        for (auto x : cluster) z += x;
        z /= static_cast<double>(cluster.size());
        // Newton with known multiplicity on the rational function itself.
        const double m = static_cast<double>(cluster.size());
        for (int it = 0; it < 40; ++it) {
            cplx g = (*this)(z), dg = derivative(z);
            if (g == cplx{} || dg == cplx{}) break;
            cplx step = m * g / dg;
            cplx trial = z - step;
            // |g| alone decays towards infinity; weigh by the chart at infinity
            const auto weight = [](cplx x) { return std::max(1.0, std::norm(x)); };
            if (!(std::abs((*this)(trial)) * weight(trial) < std::abs(g) * weight(z))) break;
            z = trial;
            if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
        }
        out.push_back({SpecialPoint::finite(z), static_cast<int>(cluster.size())});
    }
    const int deg_n = static_cast<int>(N.size()) - 1;
    const int deg_d = static_cast<int>(D.size()) - 1;
    const int ord_inf = deg_d - deg_n - 2;
    if (ord_inf > 0) out.push_back({SpecialPoint::infinity(), ord_inf});
    if (poles_out) {
        poles_out->clear();
        for (std::size_t i = 0; i < orders.size(); ++i)
            poles_out->push_back({SpecialPoint::finite(source[i]->p), static_cast<int>(orders[i].second)});
        if (ord_inf < 0) poles_out->push_back({SpecialPoint::infinity(), -ord_inf});
    }
    return out;
}

int RationalDifferential::order_at(const SpecialPoint& p, double rel_tol) const {
    std::vector<DivisorPoint> poles;
    auto zs = zeros(&poles);
    auto same = [&](const SpecialPoint& a) {
        if (a.at_infinity || p.at_infinity) return a.at_infinity == p.at_infinity;
        return std::abs(a.z - p.z) <= std::max(rel_tol, 1e-5) * (1.0 + std::abs(p.z));
    };
    for (const auto& d : poles)
        if (same(d.point)) return -d.multiplicity;
    for (const auto& d : zs)
        if (same(d.point)) return d.multiplicity;
    return 0;
}

RationalDifferential operator+(const RationalDifferential& a, const RationalDifferential& b) {
    RationalDifferential r = a;
    r.add(b);
    return r;
}

RationalDifferential operator-(const RationalDifferential& a, const RationalDifferential& b) {
    RationalDifferential r = a;
    r.add(b, -1.0);
    return r;
}

RationalDifferential operator*(cplx s, const RationalDifferential& a) {
    RationalDifferential r;
    r.add(a, s);
    return r;
}

RationalDifferential rn_genus0(const std::vector<SingularPart>& parts) {
    constexpr const char* where = "riemann-components/rn_genus0";
    cplx residues{};
    double scale = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        residues += parts[i].residue();
        scale += std::abs(parts[i].residue());
        for (std::size_t j = 0; j < i; ++j) {
            const auto& a = parts[i].chart.center;
            const auto& b = parts[j].chart.center;
            if (a.at_infinity == b.at_infinity && (a.at_infinity || a.z == b.z))
                fail(ErrorKind::invalid_argument, where, "two singular parts share the anchor " + describe(a));
        }
    }
    if (std::abs(residues) > 1e-12 * (1.0 + scale))
        fail(ErrorKind::validation, where, "residues do not sum to zero; no such differential exists");
    RationalDifferential w;
    for (const auto& part : parts) {
        if (part.chart.center.at_infinity) {
            // u ζ^{−k} dζ with ζ = 1/z equals −u z^{k−2} dz; the residue term is carried by the finite poles.
            for (std::size_t k = 2; k <= part.u.size(); ++k)
                if (part.u[k - 1] != cplx{}) w.add_monomial(k - 2, -part.u[k - 1]);
            continue;
        }
        if (!(part.chart.scale > 0.0)) fail(ErrorKind::invalid_argument, where, "chart scale must be positive");
        for (std::size_t k = 1; k <= part.u.size(); ++k)
            if (part.u[k - 1] != cplx{})
                w.add_pole_term(part.chart.center.z, k, part.u[k - 1] * std::pow(part.chart.scale, static_cast<double>(k) - 1.0));
    }
    return w;
}

Jet laurent_expand(const RationalDifferential& w, const LocalChart& chart, std::size_t m) {
    Jet j;
    j.chart = chart;
    j.u = w.laurent(chart, -1, static_cast<int>(m) - 1);
    for (auto x : j.u)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            fail(ErrorKind::numerical, "riemann-components/laurent_expand", "non-finite jet coefficient");
    return j;
}

std::vector<DivisorPoint> zeros_of(const RationalDifferential& w) { return w.zeros(); }

}  // namespace rn
