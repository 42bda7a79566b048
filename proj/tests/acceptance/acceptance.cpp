// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "blowup/blowup.hpp"
#include "degen/degen.hpp"
#include "harness/commands.hpp"
#include "jump/jump.hpp"
#include "kirchhoff/kirchhoff.hpp"
#include "plumbing/plumbing.hpp"
#include "support.hpp"
#include "util/error.hpp"
#include "util/fit.hpp"

using namespace rn;

namespace {

std::string fixture(const std::string& name) { return std::string(RN_FIXTURE_DIR) + "/" + name; }

const std::vector<std::string> kFixtures{"dumbbell.json", "two_sphere.json", "banana.json", "triangle.json",
                                         "three_stratum_chain.json"};
const std::vector<std::string> kTrees{"dumbbell.json", "two_sphere.json", "three_stratum_chain.json"};

struct Outcome {
    bool passed = false;
    std::string detail;
};

// 1. flow and force bounds, residuals
Outcome kirchhoff_bounds() {
    std::mt19937_64 rng(0xacce5501);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int violations = 0;
    double worst_residual = 0.0, worst_flow = 0.0, worst_force = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        auto g = testing::random_connected_graph(rng, 10, 14, 4);
        auto f = testing::zero_sum(rng, g.legs().size());
        Resistances rho(g.edge_count());
        for (auto& r : rho) r = testing::log_uniform(rng, 1e-3, 1e3);
        ElectromotiveForce emf;
        for (std::size_t i = 0; i < g.cycle_rank(); ++i) emf.values.push_back(u(rng));

        auto flow = solve_flow(g, f, rho);
        const double fb = flow_bound(f);
        if (flow.max_abs() > fb * (1.0 + 1e-12)) ++violations;
        if (fb > 0) worst_flow = std::max(worst_flow, flow.max_abs() / fb);

        auto force = solve_force(g, emf, rho);
        auto bound = force_bound(g, emf, rho);
        if (!bound.enumerated || force.max_abs() > bound.bound * (1.0 + 1e-12)) ++violations;
        if (bound.bound > 0) worst_force = std::max(worst_force, force.max_abs() / bound.bound);

        auto general = solve_general(g, f, emf, rho);
        auto res = kirchhoff_residuals(g, f, emf, rho, general);
        worst_residual = std::max({worst_residual, res.conservation, res.cycle});
    }
    return {violations == 0 && worst_residual <= 1e-10,
            fmt::format("200 graphs, violations {}, max |c|/flow bound {:.3f}, max |c|/force bound {:.3f}, residual {:.2e}",
                        violations, worst_flow, worst_force, worst_residual)};
}

// 2. multi-scale limits
Outcome multiscale_convergence() {
    std::mt19937_64 rng(0xacce5502);
    std::uniform_int_distribution<int> alpha(0, 3);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        DualGraph g = testing::random_connected_graph(rng, 8, 10, 3, 3);
        while (g.edge_count() == 0) g = testing::random_connected_graph(rng, 8, 10, 3, 3);
        auto f = testing::zero_sum(rng, 3);
        std::vector<double> a, b;
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            a.push_back(alpha(rng));
            b.push_back(testing::log_uniform(rng, 0.2, 5.0));
        }
        auto schedule = ResistanceSchedule::parametric(a, b);
        auto limit = solve_multiscale(g, f, classify_sequence(schedule));
        auto c = solve_flow(g, f, schedule.at(1e6));
        worst = std::max(worst, (c - limit).max_abs() / std::max(limit.max_abs(), 1e-300));
    }
    const DualGraph banana = DualGraph::build(2, {{0, 1}, {0, 1}}, {{0, "p1"}, {1, "p2"}});
    const auto schedule = ResistanceSchedule::parametric({0, 1}, {1, 1});
    double closed = 0.0;
    for (double k : {10.0, 1e2, 1e3, 1e4, 1e5, 1e6}) {
        auto c = solve_flow(banana, {1, -1}, schedule.at(k));
        closed = std::max(closed, std::abs(c.values[1] * (k + 1.0) - 1.0));
    }
    return {worst <= 1e-3 && closed <= 1e-12,
            fmt::format("20 schedules, max relative gap at k=1e6 {:.2e}; banana c2 = 1/(k+1) relative error {:.2e}", worst, closed)};
}

// 3. tree fixtures against the global-sphere oracle
Outcome tree_oracle() {
    double worst = 0.0;
    std::size_t probes = 0;
    for (const auto& name : kTrees) {
        auto sc = harness::parse_scenario(fixture(name));
        for (double s : {1e-3, 1e-4, 1e-5}) {
            auto curve = PlumbedCurve::from_log(sc.geometry, std::vector<double>(sc.graph().edge_count(), -std::log(s)), sc.arg);
            auto rn = rn_construct(curve, sc.marked);
            auto cmp = harness::compare_with_tree_oracle(curve, sc.marked, rn.psi);
            worst = std::max(worst, cmp.rel_error);
            probes = std::max(probes, cmp.probes);
        }
    }
    return {worst <= 1e-7, fmt::format("3 trees x 3 values of |s|, up to {} probes, max relative error {:.2e}", probes, worst)};
}

// 4. ARN norm against the seam radius
Outcome arn_slope() {
    auto sc = harness::parse_scenario(fixture("banana.json"));
    const auto& geo = sc.geometry;
    std::string detail;
    bool ok = true;
    for (int m = 0; m <= 2; ++m) {
        // (z − a)^m (z − b)^m dz on component 1, vanishing to order m at both of its node points
        std::vector<cplx> poly{1.0};
        for (int i = 0; i < m; ++i)
            for (cplx root : {geo.node_point(0), geo.node_point(2)}) {
                std::vector<cplx> next(poly.size() + 1);
                for (std::size_t j = 0; j < poly.size(); ++j) {
                    next[j + 1] += poly[j];
                    next[j] -= root * poly[j];
                }
                poly = next;
            }
        RationalDifferential f;
        for (std::size_t j = 0; j < poly.size(); ++j) f.add_monomial(j, poly[j]);
        std::vector<RationalDifferential> data(2);
        data[1] = f;
        std::vector<double> lr, ln;
        for (double rho : {0.08, 0.04, 0.02, 0.01}) {
            auto c = PlumbedCurve::from_s(geo, {rho * rho, cplx(0.0, rho * rho)});
            auto w = solve_arn(c, jump_data(c, data, 64));
            lr.push_back(std::log(rho));
            ln.push_back(std::log(std::hypot(arn_l2_norm(w, 0), arn_l2_norm(w, 1))));
        }
        const double slope = fit_line(lr, ln).slope;
        ok = ok && std::abs(slope - (m + 1)) <= 0.1;
        detail += fmt::format("{}ord {}: slope {:.3f}", m ? ", " : "", m, slope);
    }
    return {ok, detail};
}

// 5. period log-divergence on the banana fixture
Outcome period_divergence() {
    auto sc = harness::parse_scenario(fixture("banana.json"));
    const auto& geo = sc.geometry;
    const auto basis = cycle_basis(sc.graph());
    // fixed currents from the fixture's network, unequal |s| so the log term is not trivially zero
    const auto c = solve_flow(sc.graph(), inflows_of(sc.marked), sc.kirchhoff->resistances);
    std::vector<double> x, fin;
    double homologous = 0.0;
    for (double s : {1e-2, 4e-3, 1e-3, 2.5e-4, 6.25e-5, 1.5625e-5}) {
        auto curve = PlumbedCurve::from_s(geo, {s, s / 3.0});
        auto psi = build_psi_c(curve, c, sc.marked);
        auto rep = period_im(psi, basis.cycles[0]);
        CycleRealization alt{basis.cycles[0], {{cplx(3.0, -2.5)}, {cplx(-2.0, -2.5), cplx(3.0, 3.0)}}};
        auto rep2 = period_im(psi, alt);
        homologous = std::max(homologous, std::abs(rep2.value - rep.value));
        x.push_back(std::sqrt(s));
        fin.push_back(rep.finite_part);
    }
    std::vector<double> sx;
    for (double r : x) sx.push_back(r * r);
    const double constant = fit_line(sx, fin).intercept;
    std::vector<double> lx, lr;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log(x[i]));
        lr.push_back(std::log(std::abs(fin[i] - constant)));
    }
    const double slope = fit_line(lx, lr).slope;
    return {std::abs(slope - 1.0) <= 0.1 && homologous <= 1e-6,
            fmt::format("remainder slope against sqrt|s| {:.3f} (expected 1 +- 0.1), homologous realizations differ by {:.2e}",
                        slope, homologous)};
}

// 6. limit residues on the banana family
Outcome limit_residues() {
    auto sc = harness::parse_scenario(fixture("banana.json"));
    auto fam = sc.family();
    auto rep = limit_rn(fam);
    const double kmax = fam.k_grid.back();
    bool monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].k >= kmax / 100.0 && rep.rows[i - 1].k >= kmax / 100.0 &&
            rep.rows[i].deviation > rep.rows[i - 1].deviation)
            monotone = false;
    const double dev = rep.rows.back().deviation;
    std::string devs;
    for (const auto& r : rep.rows) devs += fmt::format("{}{:.1e}", devs.empty() ? "" : " ", r.deviation);
    return {dev <= 5e-3 && monotone,
            fmt::format("k_max {:.0f}, deviation {:.2e}, monotone over the last two decades: {} (deviations {})", kmax, dev,
                        monotone ? "yes" : "no", devs)};
}

// 7. RN certificate on every construction
Outcome rn_certificate() {
    double worst_period = 0.0, worst_seam = 0.0;
    std::size_t count = 0;
    auto certify = [&](const RNConstruction& rn) {
        ++count;
        worst_period = std::max(worst_period, rn.max_period());
        const double scale = std::max(1.0, rn.c.max_abs());
        for (std::size_t e = 0; e < rn.psi.curve().graph().oriented_count(); ++e)
            worst_seam = std::max(worst_seam, std::abs(seam_integral(rn.psi, e).imag()) / scale);
    };
    for (const auto& name : kFixtures) {
        auto sc = harness::parse_scenario(fixture(name));
        for (double s : sc.settings.s_values)
            certify(rn_construct(PlumbedCurve::from_log(sc.geometry, std::vector<double>(sc.graph().edge_count(), -std::log(s)), sc.arg),
                                 sc.marked));
        for (const auto& rn : solve_family(sc.family())) certify(rn);
    }
    return {worst_period <= 1e-8 && worst_seam <= 1e-8,
            fmt::format("{} constructions, max |Im period| {:.2e}, max |Im seam integral| {:.2e}", count, worst_period, worst_seam)};
}

// 8. zero conservation and tracking
Outcome zero_tracking() {
    bool ok = true;
    std::string detail;
    for (const auto& name : kFixtures) {
        auto sc = harness::parse_scenario(fixture(name));
        auto fam = sc.family();
        auto grid = solve_family(fam);
        auto tw = twisted_limit(stratify(fam, grid));
        bool totals = true;
        ZeroTrack last;
        for (const auto& rn : grid) {
            last = track_zeros(rn.psi, sc.marked);
            totals = totals && last.total == zero_budget(sc.graph(), sc.marked) && last.consistent;
        }
        bool annuli = last.annuli.size() == tw.nodes.size();
        for (std::size_t i = 0; annuli && i < last.annuli.size(); ++i)
            annuli = last.annuli[i].count == tw.nodes[last.annuli[i].edge].multiplicity;
        const bool degree = tw.degree == tw.expected_degree;
        ok = ok && totals && annuli && degree;
        detail += fmt::format("{}{}: totals {}, annuli {}, degree {}/{}", detail.empty() ? "" : "; ", sc.name, totals ? "ok" : "BAD",
                              annuli ? "ok" : "BAD", tw.degree, tw.expected_degree);
    }
    return {ok, detail};
}

// 9. stratification sanity
Outcome stratification() {
    bool ok = true;
    std::string detail;
    for (const auto& name : kFixtures) {
        auto sc = harness::parse_scenario(fixture(name));
        auto st = stratify(sc.family());
        bool sums = true, separation = true;
        for (const auto& step : st.strata) {
            int sum = 0;
            for (int me : step.boundary_orders) sum += me;
            sums = sums && sum <= st.m0;
        }
        for (std::size_t l = 1; l < st.strata.size(); ++l) separation = separation && st.separation_slope(l) > 0.0;
        bool poles = true;
        try {
            twisted_limit(st);  // throws when ord >= −m_e − 2 fails at a node
        } catch (const Error&) {
            poles = false;
        }
        ok = ok && sums && separation && poles;
        detail += fmt::format("{}: {} strata{}{}{}; ", sc.name, st.strata.size(), sums ? "" : " SUM", separation ? "" : " SEP",
                              poles ? "" : " POLE");
    }
    // two-sphere: Φ^(1) = −a dw/w² on the attached component
    auto sc = harness::parse_scenario(fixture("two_sphere.json"));
    const cplx a = sc.parts[0].at(1);
    auto st = stratify(sc.family());
    double err = 1.0;
    if (st.strata.size() == 2 && st.piece(1).poles().size() == 1 && st.piece(1).poles()[0].p == cplx{}) {
        auto coeffs = st.piece(1).poles()[0].a;
        coeffs.resize(std::max<std::size_t>(coeffs.size(), 2));
        double big = 0.0;
        for (auto x : coeffs) big = std::max(big, std::abs(x));
        err = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            const cplx want = k == 1 ? -a / std::abs(a) : cplx{};
            err = std::max(err, std::abs(coeffs[k] / big - want));
        }
        err = std::max(err, st.piece(1).polynomial().empty() ? 0.0 : 1.0);
    }
    ok = ok && err <= 1e-6;
    detail += fmt::format("two-sphere Phi^(1) coefficient error {:.2e}", err);
    return {ok, detail};
}

// 10. m-balanced approximation on the tree fixture
Outcome balanced_rates() {
    auto sc = harness::parse_scenario(fixture("dumbbell.json"));
    // second-order data on top of the fixture's residues, so every jet coefficient is active
    std::vector<std::vector<cplx>> parts = sc.parts;
    parts[0].resize(2);
    parts[1].resize(2);
    parts[0][1] = cplx(0.4, 0.2);
    parts[1][1] = cplx(-0.3, 0.1);
    std::vector<std::vector<cplx>> chart(parts.size());
    for (std::size_t l = 0; l < parts.size(); ++l)
        chart[l] = harness::to_chart_coefficients(parts[l], sc.geometry.marked_chart(l).scale);
    const auto marked = bind_marked_parts(sc.geometry, chart);

    bool ok = true;
    double worst_balance = 0.0, worst_direct = 0.0;
    std::string detail;
    for (std::size_t m : {2U, 4U, 6U}) {
        std::vector<double> xs, compact, seam;
        for (double s = 0.1; s >= 0.1 / 64 * 0.99; s /= 2) {
            auto curve = PlumbedCurve::from_s(sc.geometry, {s});
            auto rn = rn_construct(curve, marked);
            BalancedOptions opts;
            opts.m = m;
            auto a = balanced_approximation(curve, marked, rn.c, opts);
            worst_balance = std::max(worst_balance, a.balancing_residual);
            worst_direct = std::max(worst_direct, a.direct_difference);
            const double e = approximation_error(rn.psi, a);
            // points at the rounding floor carry no rate information
            if (!(e > 1e-13 * std::max(1.0, rn.psi.phi_seam_scale()))) continue;
            xs.push_back(std::log(s));
            compact.push_back(std::log(e));
            seam.push_back(std::log(seam_approximation_error(rn.psi, a)));
        }
        const double target = (m + 1) / 2.0;
        const double slope = xs.size() >= 2 ? fit_line(xs, compact).slope : NAN;
        const double seam_slope = xs.size() >= 2 ? fit_line(xs, seam).slope : NAN;
        ok = ok && std::abs(slope - target) <= 0.15;
        detail += fmt::format("m={}: compact slope {:.3f} (expected {:.1f}), seam slope {:.3f}, {} points; ", m, slope, target,
                              seam_slope, xs.size());
    }
    ok = ok && worst_balance <= 1e-10 && worst_direct <= 1e-9;
    detail += fmt::format("balancing residual {:.2e}, series vs direct {:.2e}", worst_balance, worst_direct);
    return {ok, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Kirchhoff bounds", kirchhoff_bounds},
        {"multi-scale convergence", multiscale_convergence},
        {"tree-plumbing oracle", tree_oracle},
        {"ARN bound slope", arn_slope},
        {"period log-divergence", period_divergence},
        {"limit residues", limit_residues},
        {"RN certificate", rn_certificate},
        {"zero conservation and tracking", zero_tracking},
        {"stratification sanity", stratification},
        {"m-balanced approximation", balanced_rates},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!out.passed) ++failed;
        std::printf("[%s] %2zu %s (%.1fs): %s\n", out.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
