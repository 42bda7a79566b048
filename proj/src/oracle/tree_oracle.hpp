#pragma once

// Global-sphere oracle for plumbed trees of rational curves: gluing z_e z_{−e} = s_e along a tree gives
// a single sphere with a coordinate Z that is a Möbius function of z on every component.
// The sphere coordinate is rooted at the component being evaluated, so deep components are not
// squeezed into a region of size Π|s_e| (which would cost that many digits).

#include <cmath>
#include <complex>
#include <vector>

#include "jump/jump.hpp"
#include "util/error.hpp"

namespace rn::oracle {

struct Mobius {
    cplx a{1.0}, b{}, c{}, d{1.0};

    cplx operator()(cplx z) const { return (a * z + b) / (c * z + d); }
    cplx derivative(cplx z) const { return (a * d - b * c) / ((c * z + d) * (c * z + d)); }
    bool sends_to_infinity(cplx z) const { return c * z + d == cplx{}; }
    cplx at_infinity() const { return a / c; }  // requires c != 0
    Mobius after(const Mobius& m) const {  // this ∘ m
        return {a * m.a + b * m.c, a * m.b + b * m.d, c * m.a + d * m.c, c * m.b + d * m.d};
    }
};

class RootedSphere {
public:
    RootedSphere(const PlumbedCurve& curve, const std::vector<SingularPart>& marked, std::size_t root) {
        const DualGraph& g = curve.graph();
        if (g.cycle_rank() != 0) fail(ErrorKind::invalid_argument, "tree_oracle", "dual graph must be a tree");
        const CurveGeometry& geo = curve.geometry;
        maps_.assign(g.vertex_count(), Mobius{});
        std::vector<bool> seen(g.vertex_count(), false);
        std::vector<std::size_t> stack{root};
        seen[root] = true;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            for (std::size_t a : g.incoming(p)) {
                const std::size_t b = a ^ 1U;
                const std::size_t child = g.target(b);
                if (seen[child]) continue;
                seen[child] = true;
                // parent coordinate = q_a + r_a s / z_b, z_b = (w − q_b)/r_b
                const cplx qa = geo.node_point(a), qb = geo.node_point(b);
                const cplx k = geo.chart_scale(a) * geo.chart_scale(b) * curve.s(a);
                maps_[child] = maps_[p].after(Mobius{qa, k - qa * qb, 1.0, -qb});
                stack.push_back(child);
            }
        }
        for (std::size_t l = 0; l < marked.size(); ++l) {
            const auto& part = marked[l];
            if (part.u.empty()) continue;
            add_part(maps_[g.legs()[l].vertex], part);
        }
    }

    const Mobius& map(std::size_t v) const { return maps_.at(v); }

    // Global differential G(Z) dZ.
    cplx global(cplx Z) const {
        cplx acc{};
        for (const auto& p : finite_)
            for (std::size_t k = 0; k < p.second.size(); ++k) acc += p.second[k] * std::pow(Z - p.first, -static_cast<double>(k + 1));
        for (std::size_t k = 1; k < infinite_.size(); ++k) acc -= infinite_[k] * std::pow(Z, static_cast<double>(k - 1));
        return acc;
    }

    // Ψ^v(z) as the coefficient of dz on component v.
    cplx operator()(std::size_t v, cplx z) const {
        const Mobius& m = maps_.at(v);
        return global(m(z)) * m.derivative(z);
    }

private:
    // Laurent coefficients at the image point by a contour integral in the marked chart:
    // a_k = (1/2πi) ∮ u(t) (Z(t) − Z_p)^{k−1} dt, or with T = 1/Z when Z_p = ∞.
    void add_part(const Mobius& m, const SingularPart& part) {
        const LocalChart& ch = part.chart;
        auto point = [&](cplx t) {
            const cplx w = ch.center.at_infinity ? 1.0 / t : ch.center.z + ch.scale * t;
            return m(w);
        };
        bool infinite;
        cplx Zp;
        if (ch.center.at_infinity) {
            infinite = m.c == cplx{};
            Zp = infinite ? cplx{} : m.at_infinity();
        } else {
            infinite = m.sends_to_infinity(ch.center.z);
            Zp = infinite ? cplx{} : m(ch.center.z);
        }
        const std::size_t K = part.u.size();
        std::vector<cplx> a(K);
        const int M = 256;
        const double radius = 0.25;
        for (int j = 0; j < M; ++j) {
            const cplx t = std::polar(radius, 2.0 * M_PI * j / M);
            cplx ut{};
            for (std::size_t k = 0; k < K; ++k) ut += part.u[k] * std::pow(t, -static_cast<double>(k + 1));
            const cplx x = infinite ? 1.0 / point(t) : point(t) - Zp;
            cplx xp = 1.0;
            for (std::size_t k = 0; k < K; ++k) {
                a[k] += ut * xp * t;  // dt = i t dθ; the i cancels against 1/(2πi)
                xp *= x;
            }
        }
        for (auto& x : a) x /= static_cast<double>(M);
        if (infinite) {
            if (infinite_.size() < K) infinite_.resize(K);
            for (std::size_t k = 0; k < K; ++k) infinite_[k] += a[k];
        } else {
            finite_.emplace_back(Zp, a);
        }
    }

    std::vector<Mobius> maps_;
    std::vector<std::pair<cplx, std::vector<cplx>>> finite_;
    std::vector<cplx> infinite_;  // a_k in T = 1/Z, index k−1
};

class TreeOracle {
public:
    TreeOracle(const PlumbedCurve& curve, const std::vector<SingularPart>& marked) {
        for (std::size_t v = 0; v < curve.graph().vertex_count(); ++v) rooted_.emplace_back(curve, marked, v);
    }

    const RootedSphere& rooted(std::size_t v) const { return rooted_.at(v); }
    cplx operator()(std::size_t v, cplx z) const { return rooted_.at(v)(v, z); }

private:
    std::vector<RootedSphere> rooted_;
};

}  // namespace rn::oracle
