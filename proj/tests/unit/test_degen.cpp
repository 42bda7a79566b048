#include <doctest.h>

#include <cmath>
#include <random>

#include "../support.hpp"
#include "degen/degen.hpp"
#include "util/error.hpp"
#include "util/fit.hpp"

using namespace rn;

namespace {

const cplx I(0.0, 1.0);

bool close(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); }

// C0 carries the marked points; C1 is attached at z = 0 on both sides.
CurveGeometry two_sphere(std::vector<SpecialPoint> marked = {SpecialPoint::finite(1.0)}) {
    std::vector<Leg> legs;
    for (std::size_t i = 0; i < marked.size(); ++i) legs.push_back({0, "p" + std::to_string(i + 1)});
    auto g = DualGraph::build(2, {{0, 1}}, legs);
    return CurveGeometry::build(g, {0.0, 0.0}, marked);
}

CurveGeometry dumbbell() {
    auto g = DualGraph::build(2, {{0, 1}}, {{0, "p1"}, {1, "p2"}});
    return CurveGeometry::build(g, {0.0, 0.0}, {SpecialPoint::finite(1.0), SpecialPoint::finite(cplx(0.5, 1.0))});
}

CurveGeometry banana() {
    auto g = DualGraph::build(2, {{0, 1}, {0, 1}}, {{0, "p1"}, {1, "p2"}});
    return CurveGeometry::build(g, {0.0, 0.0, cplx(1.5, 0.5), cplx(1.0, -1.0)},
                                {SpecialPoint::finite(cplx(-1.5, 1.0)), SpecialPoint::finite(cplx(-1.0, 1.5))});
}

// v0 - v1 - v2 with the marked point on v0
CurveGeometry chain() {
    auto g = DualGraph::build(3, {{0, 1}, {1, 2}}, {{0, "p1"}});
    // oriented 0 → v1, 1 → v0, 2 → v2, 3 → v1
    return CurveGeometry::build(g, {0.0, 0.0, 0.0, cplx(1.0, 0.5)}, {SpecialPoint::finite(1.0)});
}

DegeneratingFamily family(CurveGeometry geo, std::vector<std::vector<cplx>> u, std::vector<double> beta,
                          std::vector<double> grid) {
    DegeneratingFamily f;
    f.marked = bind_marked_parts(geo, u);
    f.geometry = std::move(geo);
    f.schedule = ResistanceSchedule::parametric(std::vector<double>(beta.size(), 1.0), beta);
    f.k_grid = std::move(grid);
    return f;
}

double leg_scale(const CurveGeometry& g, std::size_t l) { return g.marked_chart(l).scale; }

}  // namespace

TEST_CASE("balancing_singular_part examples") {
    LocalChart chart{SpecialPoint::finite(0.0), 1.0};
    cplx c(0.3, 0.0), s(0.01, 0.02);
    auto p = balancing_singular_part(Jet{chart, {I * c, 0.0, 0.0}}, s, chart);
    CHECK(p.u[0] == -I * c);
    CHECK(p.u[1] == cplx{});
    cplx u0(0.7, -0.1);
    auto q = balancing_singular_part(Jet{chart, {0.0, u0, 0.0}}, s, chart);
    CHECK(close(q.u[1], -s * u0, 1e-15));
    CHECK(q.u[0] == cplx{});
    CHECK(q.u[2] == cplx{});
    auto z = balancing_singular_part(Jet{chart, {0.0, 0.0, 0.0}}, s, chart);
    for (auto x : z.u) CHECK(x == cplx{});

    // the balanced part is the pull-back of the jet under z_e = s/z_{−e}
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(-1, 1);
    Jet j{chart, {I * u(rng), cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng))}};
    auto sp = balancing_singular_part(j, s, chart);
    for (cplx w : {cplx(0.3, 0.1), cplx(-0.2, 0.5)}) {
        cplx ze = s / w, jet_val{}, sp_val{};
        for (std::size_t i = 0; i < j.u.size(); ++i) jet_val += j.u[i] * std::pow(ze, static_cast<double>(i) - 1.0);
        for (std::size_t i = 0; i < sp.u.size(); ++i) sp_val += sp.u[i] * std::pow(w, -static_cast<double>(i) - 1.0);
        // J(z_e) dz_e with dz_e = −s w^{−2} dw
        CHECK(close(jet_val * (-s / (w * w)), sp_val, 1e-12));
    }
}

TEST_CASE("family validation") {
    auto f = family(dumbbell(), {{I}, {-I}}, {1.0}, {2.0, 3.0, 4.0});
    CHECK_NOTHROW(f.validate());
    CHECK(f.curve_at(3.0).log_modulus[0] == doctest::Approx(3.0));
    auto bad = f;
    bad.k_grid = {3.0, 3.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    auto flat = f;
    flat.schedule = ResistanceSchedule::parametric({0.0}, {2.0});
    CHECK_THROWS_AS(flat.validate(), Error);
    CHECK(zero_budget(banana().graph(), bind_marked_parts(banana(), {{I}, {-I}})) == 2);
    CHECK(zero_budget(two_sphere().graph(), bind_marked_parts(two_sphere(), {{0.0, 1.0}})) == 0);
}

TEST_CASE("limit_rn: banana third kind converges to the symmetric split") {
    const double r = 0.8;
    auto f = family(banana(), {{I * r}, {-I * r}}, {1.0, 1.0}, {10.0, 30.0, 100.0, 300.0, 1000.0});
    auto rep = limit_rn(f);
    // inflow r at v0 splits evenly and arrives at v1 along both edges
    CHECK(rep.c_limit.values[0] == doctest::Approx(r / 2).epsilon(1e-12));
    CHECK(rep.c_limit.values[1] == doctest::Approx(r / 2).epsilon(1e-12));
    for (const auto& row : rep.rows)
        for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(row.residues[k] - I * row.c.values[k]) <= 1e-9);
    CHECK(rep.monotone_tail);
    CHECK(rep.final_deviation <= 5e-3);
    CHECK(rep.rows.front().deviation > rep.final_deviation);
    auto poles = rep.phi[0].poles();
    CHECK(poles.size() == 3);
}

TEST_CASE("limit_rn: second kind and separated simple poles") {
    auto geo = two_sphere();
    auto f = family(geo, {{0.0, 1.0 / leg_scale(geo, 0)}}, {1.0}, {4.0, 6.0, 8.0});
    auto rep = limit_rn(f);
    CHECK(rep.c_limit.values[0] == 0.0);
    CHECK(rep.phi[1].is_zero());
    CHECK_FALSE(rep.phi[0].is_zero());
    for (const auto& row : rep.rows) CHECK(std::abs(row.residues[0]) <= 1e-12);

    auto d = family(dumbbell(), {{I}, {-I}}, {1.0}, {4.0, 6.0, 8.0});
    auto dl = limit_rn(d);
    // a simple pole of residue ∓i appears at each node preimage
    CHECK(close(dl.phi[0].laurent(d.geometry.node_chart(1), -1, -1)[0], -I, 1e-14));
    CHECK(close(dl.phi[1].laurent(d.geometry.node_chart(0), -1, -1)[0], I, 1e-14));
    CHECK(dl.final_deviation <= 1e-12);
}

TEST_CASE("stratify: two-sphere second kind has two strata and Phi^(1) = -a dw/w^2") {
    auto geo = two_sphere();
    const cplx a = std::polar(1.0, 0.6);
    auto f = family(geo, {{0.0, a / leg_scale(geo, 0)}}, {1.0}, {6.0, 8.0, 10.0, 12.0});
    auto st = stratify(f);
    REQUIRE(st.strata.size() == 2);
    CHECK(st.m0 == 0);
    CHECK(st.m == 1);
    CHECK(st.strata[0].vertices == std::vector<std::size_t>{0});
    CHECK(st.strata[1].vertices == std::vector<std::size_t>{1});
    CHECK(st.jet_convergent);
    // μ^(1) ≍ 1/|s|
    CHECK(st.strata[1].mu_fit.slope == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(st.separation_slope(1) > 0.0);
    CHECK(st.strata[0].scaled_consistency <= 1e-4);
    const auto& phi1 = st.piece(1);
    REQUIRE(phi1.poles().size() == 1);
    CHECK(std::abs(phi1.poles()[0].p) == 0.0);
    const auto& coeffs = phi1.poles()[0].a;
    REQUIRE(coeffs.size() >= 2);
    CHECK(std::abs(coeffs[0]) <= 1e-6);
    CHECK(std::abs(coeffs[1] - (-a)) <= 1e-6);
    for (std::size_t k = 2; k < coeffs.size(); ++k) CHECK(std::abs(coeffs[k]) <= 1e-6);
    CHECK(st.strata[0].boundary_orders == std::vector<int>{0});

    auto tw = twisted_limit(st);
    CHECK(tw.zeros.empty());
    REQUIRE(tw.nodes.size() == 1);
    CHECK(tw.nodes[0].multiplicity == 0);
    CHECK(tw.nodes[0].ord_forward == -2);
    CHECK(tw.nodes[0].ord_backward == 0);
    CHECK(tw.marked_multiplicity == std::vector<int>{0});
    CHECK(tw.degree == tw.expected_degree);
    CHECK(tw.expected_degree == 0);
}

TEST_CASE("stratify: three-stratum chain") {
    auto geo = chain();
    const cplx a(0.6, 0.8);
    auto f = family(geo, {{0.0, a / leg_scale(geo, 0)}}, {1.0, 1.0}, {8.0, 10.0, 12.0, 14.0});
    auto st = stratify(f);
    REQUIRE(st.strata.size() == 3);
    for (std::size_t v = 0; v < 3; ++v) CHECK(st.level_of[v] == v);
    CHECK(st.jet_convergent);
    for (std::size_t l = 1; l < 3; ++l) {
        CHECK(st.separation_slope(l) > 0.0);
        CHECK(st.separation_slope(l) == doctest::Approx(1.0).epsilon(0.05));
    }
    for (const auto& step : st.strata) {
        int sum = 0;
        for (int me : step.boundary_orders) sum += me;
        CHECK(sum <= st.m0);
        CHECK(step.scaled_consistency <= 1e-4);
    }
    // oracle for Φ^(2): pull back the jet of Φ^(1) at q_3 (on v1)
    const auto& phi1 = st.piece(1);
    const LocalChart c3 = geo.node_chart(3);
    const cplx u0 = phi1.laurent(c3, 0, 0)[0];
    const auto& phi2 = st.piece(2);
    auto got = phi2.laurent(geo.node_chart(2), -2, -1);
    const double norm = std::abs(got[0]);
    CHECK(std::abs(got[0] / norm - (-u0 / std::abs(u0))) <= 1e-6);
    CHECK(std::abs(got[1]) <= 1e-6 * norm);

    auto tw = twisted_limit(st);
    CHECK(tw.degree == tw.expected_degree);
    for (const auto& n : tw.nodes) CHECK(n.multiplicity >= 0);
}

TEST_CASE("stratify: single stratum when every component carries a limit") {
    auto f = family(dumbbell(), {{I}, {-I}}, {1.0}, {4.0, 6.0, 8.0});
    auto st = stratify(f);
    CHECK(st.strata.size() == 1);
    auto tw = twisted_limit(st);
    REQUIRE(tw.nodes.size() == 1);
    CHECK(tw.nodes[0].ord_forward == -1);
    CHECK(tw.nodes[0].ord_backward == -1);
    CHECK(tw.nodes[0].multiplicity == 0);
    CHECK(tw.degree == 0);

    // banana third kind: one ordinary zero on each component, matching zeros_of of the limit
    auto b = family(banana(), {{I}, {-I}}, {1.0, 1.0}, {4.0, 6.0, 8.0});
    auto sb = stratify(b);
    CHECK(sb.strata.size() == 1);
    auto tb = twisted_limit(sb);
    CHECK(tb.degree == 2);
    CHECK(tb.expected_degree == 2);
    CHECK(tb.zeros.size() == 2);
    for (const auto& n : tb.nodes) CHECK(n.multiplicity == 0);
    auto lim = limit_rn(b);
    for (const auto& z : tb.zeros) {
        auto direct = zeros_of(lim.phi[z.component]);
        bool found = false;
        for (const auto& d : direct)
            if (!d.point.at_infinity && std::abs(d.point.z - z.point.z) < 1e-8) found = true;
        CHECK(found);
    }
}

TEST_CASE("stratify: second-kind banana pushes zeros into the collars") {
    auto geo = banana();
    auto f = family(geo, {{0.0, cplx(0.5, 0.3) / leg_scale(geo, 0)}, {}}, {1.0, 1.0}, {6.0, 8.0, 10.0});
    auto st = stratify(f);
    REQUIRE(st.strata.size() == 2);
    CHECK(st.m0 == 2);
    CHECK(st.m == 5);
    CHECK(st.separation_slope(1) > 0.0);
    auto tw = twisted_limit(st);
    CHECK(tw.degree == 2);
    for (const auto& n : tw.nodes) {
        CHECK(n.ord_forward == -1);
        CHECK(n.ord_backward == 0);
        CHECK(n.multiplicity == 1);
    }

    // at finite s the two zeros sit in the collars
    auto curve = f.curve_at(10.0);
    auto rn = rn_construct(curve, f.marked);
    auto zt = track_zeros(rn.psi, f.marked);
    CHECK(zt.total == 2);
    CHECK(zt.expected == 2);
    CHECK(zt.consistent);
    REQUIRE(zt.annuli.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) CHECK(zt.annuli[k].count == tw.nodes[k].multiplicity);
    CHECK(zt.zeros.empty());
}

TEST_CASE("track_zeros: tree oracle and generic banana") {
    auto geo = two_sphere();
    auto marked = bind_marked_parts(geo, {{0.0, cplx(0.3, 0.4) / leg_scale(geo, 0)}});
    for (double s : {1e-2, 1e-4, 1e-6}) {
        auto rn = rn_construct(PlumbedCurve::from_s(geo, {s}), marked);
        auto zt = track_zeros(rn.psi, marked);
        CHECK(zt.total == 0);
        CHECK(zt.zeros.empty());
        CHECK(zt.annuli[0].count == 0);
        CHECK(zt.consistent);
    }

    auto bg = banana();
    auto bm = bind_marked_parts(bg, {{I * 0.7}, {-I * 0.7}});
    auto rn = rn_construct(PlumbedCurve::from_s(bg, {1e-4, 1e-4}), bm);
    auto zt = track_zeros(rn.psi, bm);
    CHECK(zt.total == 2);
    CHECK(zt.expected == 2);
    CHECK(zt.consistent);
    CHECK(zt.zeros.size() == 2);
    for (const auto& z : zt.zeros) CHECK(std::abs(rn.psi(z.component, z.point.z)) <= 1e-10);
    // zeros approach those of the limit differential
    auto f = family(bg, {{I * 0.7}, {-I * 0.7}}, {1.0, 1.0}, {4.0, 6.0, 8.0});
    auto tw = twisted_limit(stratify(f));
    for (const auto& z : zt.zeros) {
        double best = 1e300;
        for (const auto& p : tw.zeros)
            if (p.component == z.component) best = std::min(best, std::abs(p.point.z - z.point.z));
        CHECK(best < 0.1);
    }
}

TEST_CASE("property: track_zeros total equals the degree budget on random trees") {
    std::mt19937_64 rng(0xd0e5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 6; ++trial) {
        auto g = testing::random_connected_graph(rng, 3, 2, 2, 0);
        auto geo = testing::random_geometry(rng, g);
        const double r = u(rng);
        std::vector<std::vector<cplx>> parts(2);
        parts[0] = {I * r, cplx(u(rng), u(rng))};
        parts[1] = {-I * r};
        auto marked = bind_marked_parts(geo, parts);
        std::vector<cplx> s(g.edge_count(), cplx(1e-3, 0.0));
        auto rn = rn_construct(PlumbedCurve::from_s(geo, s), marked);
        auto zt = track_zeros(rn.psi, marked);
        CHECK(zt.total == zt.expected);
        CHECK(zt.consistent);
    }
}

TEST_CASE("balanced approximation on the two-sphere tree") {
    auto geo = dumbbell();
    auto marked = bind_marked_parts(geo, {{I * 0.5, cplx(0.4, 0.2)}, {-I * 0.5, cplx(-0.3, 0.1)}});
    auto curve = PlumbedCurve::from_s(geo, {1e-3});
    BalancedOptions opts;
    opts.m = 4;
    auto a = balanced_approximation(curve, marked, opts);
    CHECK(a.levels.size() <= 7);
    CHECK(a.balancing_residual <= 1e-10);
    CHECK(a.direct_difference <= 1e-9);
    CHECK(a.fitted_m * 1e-3 < 1.0);
    for (std::size_t l = 1; l + 1 < a.level_norms.size(); ++l)
        CHECK(a.level_norms[l + 1] <= a.fitted_m * 1e-3 * a.level_norms[l] * (1 + 1e-12));

    auto zero = balanced_approximation(curve, bind_marked_parts(geo, {{}, {}}), opts);
    for (const auto& w : zero.phi) CHECK(w.is_zero());
}

TEST_CASE("balanced approximation error rates") {
    auto geo = dumbbell();
    auto marked = bind_marked_parts(geo, {{I * 0.5, cplx(0.4, 0.2)}, {-I * 0.5, cplx(-0.3, 0.1)}});
    for (std::size_t m : {2U, 4U}) {
        std::vector<double> xs, compact, seam;
        // keep the compact errors above the roundoff floor
        const double s_min = m == 2 ? 0.04 / 64 : 0.0025;
        for (double s = 0.04; s >= s_min * 0.99; s /= 4) {
            auto curve = PlumbedCurve::from_s(geo, {s});
            auto rn = rn_construct(curve, marked);
            BalancedOptions opts;
            opts.m = m;
            auto a = balanced_approximation(curve, marked, rn.c, opts);
            CHECK(a.balancing_residual <= 1e-10);
            xs.push_back(std::log(s));
            compact.push_back(std::log(approximation_error(rn.psi, a)));
            seam.push_back(std::log(seam_approximation_error(rn.psi, a)));
        }
        // on fixed compacts the tree error is analytic in s, on the seam it is |s|^{(m+1)/2}
        CHECK(fit_line(xs, seam).slope == doctest::Approx((m + 1) / 2.0).epsilon(0.15 / ((m + 1) / 2.0)));
        CHECK(fit_line(xs, compact).slope == doctest::Approx(static_cast<double>(m + 1)).epsilon(0.05));
    }
}

TEST_CASE("property: balanced fixed point and direct solve agree on random trees") {
    std::mt19937_64 rng(0xba1a);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 8; ++trial) {
        auto g = testing::random_connected_graph(rng, 4, 3, 2, 0);
        auto geo = testing::random_geometry(rng, g);
        const double r = u(rng);
        auto marked = bind_marked_parts(geo, {{I * r, cplx(u(rng), u(rng))}, {-I * r}});
        std::vector<cplx> s(g.edge_count());
        for (auto& x : s) x = std::polar(testing::log_uniform(rng, 1e-5, 1e-3), u(rng));
        BalancedOptions opts;
        opts.m = 1 + static_cast<std::size_t>(trial % 4);
        auto a = balanced_approximation(PlumbedCurve::from_s(geo, s), marked, opts);
        CHECK(a.balancing_residual <= 1e-10);
        CHECK(a.direct_difference <= 1e-9);
    }
}
