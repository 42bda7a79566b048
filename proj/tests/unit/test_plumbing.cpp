#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle/tree_oracle.hpp"
#include "../support.hpp"
#include "plumbing/plumbing.hpp"
#include "util/error.hpp"
#include "util/fit.hpp"

using namespace rn;

namespace {

const cplx I(0.0, 1.0);

CurveGeometry two_sphere() {
    auto g = DualGraph::build(2, {{0, 1}}, {{0, "p1"}, {1, "p2"}});
    return CurveGeometry::build(g, {0.0, 0.0}, {SpecialPoint::finite(1.0), SpecialPoint::finite(cplx(0.5, 1.0))});
}

CurveGeometry banana() {
    auto g = DualGraph::build(2, {{0, 1}, {0, 1}}, {{0, "p1"}, {1, "p2"}});
    return CurveGeometry::build(g, {0.0, 0.0, cplx(1.5, 0.5), cplx(1.0, -1.0)},
                                {SpecialPoint::finite(cplx(-1.5, 1.0)), SpecialPoint::finite(cplx(-1.0, 1.5))});
}

std::vector<cplx> probes(const CurveGeometry& geo, std::size_t v, double keep_out = 0.5) {
    std::vector<cplx> out;
    for (int i = -6; i <= 6; ++i)
        for (int j = -6; j <= 6; ++j) {
            cplx z(0.45 * i + 0.01, 0.45 * j - 0.02);
            bool ok = true;
            for (std::size_t e : geo.graph().incoming(v)) ok = ok && std::abs(z - geo.node_point(e)) > keep_out * geo.chart_scale(e);
            for (std::size_t l : geo.graph().legs_at(v))
                ok = ok && (geo.marked_point(l).at_infinity || std::abs(z - geo.marked_point(l).z) > keep_out * geo.marked_chart(l).scale);
            if (ok) out.push_back(z);
        }
    return out;
}

// Pointwise error relative to the largest oracle value on the whole probe grid: components without
// singular data carry differentials many orders smaller than the rest.
template <class A, class B>
double max_rel_error(const CurveGeometry& geo, const A& got, const B& want) {
    double worst = 0.0, scale = 0.0;
    for (std::size_t v = 0; v < geo.graph().vertex_count(); ++v)
        for (cplx z : probes(geo, v)) {
            scale = std::max(scale, std::abs(want(v, z)));
            worst = std::max(worst, std::abs(got(v, z) - want(v, z)));
        }
    return worst / std::max(scale, 1e-300);
}

CurrentAssignment loop_current(double x) {
    CurrentAssignment c(2);
    c.values = {x, -x};
    return c;
}

}  // namespace

TEST_CASE("Psi of zero data vanishes") {
    auto c = PlumbedCurve::from_s(banana(), {1e-3, 1e-3});
    auto psi = build_psi_c(c, CurrentAssignment(2), bind_marked_parts(c.geometry, {{}, {}}));
    CHECK(psi(0, cplx(2.0, 2.0)) == cplx{});
    CHECK(std::abs(seam_integral(psi, 0)) == 0.0);
}

TEST_CASE("two-sphere second-kind pole matches the global-sphere coordinate") {
    for (cplx s : {cplx(1e-3, 0.0), cplx(0.0, 1e-4), std::polar(1e-5, 1.0)}) {
        auto c = PlumbedCurve::from_s(two_sphere(), {s});
        cplx a(0.7, -0.4);
        // a dz/(z−1)² on C0; in the leg chart of scale r this is (a/r) t^{−2} dt
        auto marked = bind_marked_parts(c.geometry, {{0.0, a / c.geometry.marked_chart(0).scale}, {}});
        auto res = rn_construct(c, marked);
        CHECK(res.levels.empty());
        oracle::TreeOracle oracle(c, marked);
        // on C0 (the root) Z = z, so the oracle is exactly a dZ/(Z−1)²
        CHECK(std::abs(oracle(0, cplx(0.3, 2.0)) - a / std::pow(cplx(0.3, 2.0) - 1.0, 2)) < 1e-12);
        CHECK(max_rel_error(c.geometry, res.psi, oracle) <= 1e-9);
    }
}

TEST_CASE("random trees agree with the global-sphere oracle") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        auto g = testing::random_connected_graph(rng, 4, 3, 3, 0);
        auto geo = testing::random_geometry(rng, g);
        std::vector<cplx> s;
        std::uniform_real_distribution<double> ph(-M_PI, M_PI);
        for (std::size_t k = 0; k < g.edge_count(); ++k) s.push_back(std::polar(testing::log_uniform(rng, 1e-6, 1e-3), ph(rng)));
        auto c = PlumbedCurve::from_s(geo, s);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        auto res = testing::zero_sum(rng, g.legs().size());
        std::vector<std::vector<cplx>> parts;
        for (std::size_t l = 0; l < g.legs().size(); ++l) parts.push_back({I * res[l], cplx(u(rng), u(rng)), 0.5 * cplx(u(rng), u(rng))});
        auto marked = bind_marked_parts(geo, parts);
        auto rn = rn_construct(c, marked);
        CAPTURE(trial);
        CHECK(rn.levels.empty());
        oracle::TreeOracle oracle(c, marked);
        CHECK(max_rel_error(geo, rn.psi, oracle) <= 1e-7);
        CHECK(rn.psi.gluing_residual() <= 1e-8 * rn.psi.phi_seam_scale());
        for (std::size_t e = 0; e < g.oriented_count(); ++e)
            CHECK(std::abs(seam_integral(rn.psi, e) - 2.0 * M_PI * rn.c.at(e)) <= 1e-8 * std::max(1.0, rn.c.max_abs()));
    }
}

TEST_CASE("banana third-kind Psi: seam integrals and gluing") {
    auto geo = banana();
    auto c = PlumbedCurve::from_s(geo, {1e-3, cplx(0.0, 2e-3)});
    auto marked = bind_marked_parts(geo, {{I}, {-I}});
    auto cur = solve_flow(geo.graph(), inflows_of(marked), plumbing_resistances(c));
    auto psi = build_psi_c(c, cur, marked);
    for (std::size_t e = 0; e < 4; ++e) CHECK(std::abs(seam_integral(psi, e) - 2.0 * M_PI * cur.at(e)) <= 1e-8);
    CHECK(psi.gluing_residual() <= 1e-8 * psi.phi_seam_scale());
    // holomorphic away from the marked points: Cauchy around a probe disk is zero
    double im = closed_path_im(psi, 0, {cplx(1.5, 1.5), cplx(2.5, 1.5), cplx(2.5, 2.5), cplx(1.5, 2.5)});
    CHECK(std::abs(im) <= 1e-10);
    // a loop around the marked pole on one component: residue i gives a real integral −2π
    double around = closed_path_im(psi, 0, {cplx(-2.0, 0.5), cplx(-1.0, 0.5), cplx(-1.0, 1.5), cplx(-2.0, 1.5)});
    CHECK(std::abs(around) <= 1e-8);
}

TEST_CASE("holomorphic Omega and linearity") {
    auto geo = banana();
    auto c = PlumbedCurve::from_s(geo, {2e-3, 1e-3});
    auto op = std::make_shared<const JumpOperator>(c, 64);
    auto zero = build_omega_holo(op, CurrentAssignment(2));
    CHECK(zero(1, cplx(2.0, 0.0)) == cplx{});

    auto om = build_omega_holo(op, loop_current(1.0));
    CHECK(std::abs(seam_integral(om, 0) - 2.0 * M_PI) <= 1e-8);
    CHECK(std::abs(seam_integral(om, 2) + 2.0 * M_PI) <= 1e-8);
    CHECK(om.gluing_residual() <= 1e-8 * om.phi_seam_scale());

    CurrentAssignment bad(2);
    bad.values = {1.0, 0.0};
    CHECK_THROWS_AS(build_omega_holo(op, bad), Error);

    auto marked = bind_marked_parts(geo, {{I, 0.3}, {-I}});
    auto cur = solve_flow(geo.graph(), inflows_of(marked), plumbing_resistances(c));
    auto a = build_psi_c(op, cur, marked);
    auto b = build_omega_holo(op, loop_current(0.37));
    auto ab = build_psi_c(op, cur + loop_current(0.37), marked);
    double worst = 0.0;
    for (std::size_t v = 0; v < 2; ++v)
        for (cplx z : probes(geo, v)) worst = std::max(worst, std::abs(a(v, z) + b(v, z) - ab(v, z)));
    CHECK(worst <= 1e-9);

    // on a tree the only conserved current without inflow is zero
    auto tree = PlumbedCurve::from_s(two_sphere(), {1e-3});
    CurrentAssignment one(1);
    one.values = {1.0};
    CHECK_THROWS_AS(build_omega_holo(std::make_shared<const JumpOperator>(tree, 16), one), Error);
}

TEST_CASE("banana periods: log divergence and homologous realizations") {
    auto geo = banana();
    auto marked = bind_marked_parts(geo, {{I}, {-I}});
    auto basis = cycle_basis(geo.graph());
    REQUIRE(basis.cycles.size() == 1);
    std::vector<double> x, fin;
    for (double s : {1e-2, 4e-3, 1e-3, 2.5e-4, 6.25e-5, 1.5625e-5}) {
        auto c = PlumbedCurve::from_s(geo, {s, s});
        auto cur = solve_flow(geo.graph(), inflows_of(marked), plumbing_resistances(c));
        auto psi = build_psi_c(c, cur, marked);
        auto rep = period_im(psi, basis.cycles[0]);
        CHECK(std::abs(rep.log_term) <= 1e-12);
        x.push_back(std::sqrt(s));
        fin.push_back(rep.finite_part);

        // same graph cycle, a detour on each component
        CycleRealization alt{basis.cycles[0], {{cplx(3.0, -2.5)}, {cplx(-2.0, -2.5), cplx(3.0, 3.0)}}};
        auto rep2 = period_im(psi, alt);
        CHECK(std::abs(rep2.finite_part - rep.finite_part) <= 1e-6);
    }
    // the neck carries a Laurent series in z_e and s/z_e, so the finite part moves at order |s|
    std::vector<double> sx;
    for (double r : x) sx.push_back(r * r);
    auto fit = fit_line(sx, fin);
    std::vector<double> lx, lr;
    double M5 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double rem = std::abs(fin[i] - fit.intercept);
        lx.push_back(std::log(x[i]));
        lr.push_back(std::log(rem));
        M5 = std::max(M5, rem / x[i]);
    }
    auto slope = fit_line(lx, lr);
    MESSAGE("Pi ~ " << fit.intercept << ", remainder slope against sqrt|s| " << slope.slope << ", M5 " << M5);
    CHECK(std::abs(slope.slope - 2.0) <= 0.1);
    CHECK(M5 < 1.0);
}

TEST_CASE("rn_construct on the banana") {
    auto geo = banana();
    auto marked = bind_marked_parts(geo, {{I}, {-I}});
    std::vector<double> L, corr;
    for (double s : {1e-3, 1e-4, 1e-6, 1e-9}) {
        auto c = PlumbedCurve::from_s(geo, {s, s});
        auto rn = rn_construct(c, marked);
        CAPTURE(s);
        CHECK(rn.max_period() <= 1e-8);
        for (std::size_t e = 0; e < 4; ++e) CHECK(std::abs(seam_integral(rn.psi, e).imag()) <= 1e-8);
        CHECK(rn.direct_difference <= 1e-9);
        for (std::size_t l = 2; l < rn.level_norms.size(); ++l) CHECK(rn.level_norms[l] < rn.level_norms[l - 1]);
        const double d = (rn.c - rn.c0).max_abs();
        L.push_back(-std::log(s));
        corr.push_back(d);
    }
    // ‖c − c⁽⁰⁾‖ ≤ K/(−ln|s|)
    double K = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i) K = std::max(K, corr[i] * L[i]);
    MESSAGE("fitted K = " << K);
    for (std::size_t i = 0; i < L.size(); ++i) CHECK(corr[i] <= K / L[i] * (1.0 + 1e-12));
    CHECK(corr.back() < corr.front());
}

TEST_CASE("rn_construct on a nearly symmetric banana stays close to the flow solution") {
    auto g = DualGraph::build(2, {{0, 1}, {0, 1}}, {{0, "p1"}, {1, "p2"}});
    auto geo = CurveGeometry::build(g, {-1.0, -1.0, 1.0, 1.0}, {SpecialPoint::finite(cplx(0.0, 2.0)), SpecialPoint::finite(cplx(0.3, 2.0))});
    auto marked = bind_marked_parts(geo, {{I}, {-I}});
    auto rn = rn_construct(PlumbedCurve::from_s(geo, {1e-4, 1e-4}), marked);
    MESSAGE("correction " << (rn.c - rn.c0).max_abs());
    CHECK((rn.c - rn.c0).max_abs() <= 1e-2);
    CHECK(rn.max_period() <= 1e-8);
}

TEST_CASE("rn_construct with second-kind data") {
    auto geo = banana();
    auto marked = bind_marked_parts(geo, {{0.0, cplx(0.4, 0.2)}, {}});
    double prev = INFINITY;
    for (double s : {1e-3, 1e-6, 1e-12}) {
        auto c = PlumbedCurve::from_s(geo, {s, cplx(0.0, s)});
        auto rn = rn_construct(c, marked);
        CHECK(rn.c0.max_abs() == 0.0);
        CHECK(rn.max_period() <= 1e-8);
        const double d = rn.c.max_abs();
        CHECK(d < prev);
        prev = d;
        for (std::size_t e = 0; e < 4; ++e) CHECK(std::abs(seam_integral(rn.psi, e) - 2.0 * M_PI * rn.c.at(e)) <= 1e-8);
    }
}

TEST_CASE("rn_construct rejects inconsistent residues") {
    auto geo = banana();
    auto c = PlumbedCurve::from_s(geo, {1e-3, 1e-3});
    CHECK_THROWS_AS(rn_construct(c, bind_marked_parts(geo, {{1.0}, {-1.0}})), Error);
    CHECK_THROWS_AS(rn_construct(c, bind_marked_parts(geo, {{I}, {}})), Error);
}

TEST_CASE("rn_construct at plumbing parameters below double range") {
    auto geo = banana();
    auto marked = bind_marked_parts(geo, {{I}, {-I}});
    auto c = PlumbedCurve::from_log(geo, {5000.0, 9000.0});
    auto rn = rn_construct(c, marked);
    CHECK(rn.max_period() <= 1e-8);
    // flow split by resistances, then corrected at order 1/ln|s|
    CHECK(std::abs(rn.c.values[0] - 9.0 / 14.0) <= 1e-3);
}
