#include "harness/commands.hpp"

#include <algorithm>
#include <cmath>

#include "oracle/tree_oracle.hpp"
#include "util/error.hpp"
#include "util/parallel.hpp"

namespace rn::harness {

using json = nlohmann::ordered_json;

namespace {

json cj(cplx z) { return json::array({z.real(), z.imag()}); }

json point_json(const SpecialPoint& p) { return p.at_infinity ? json("inf") : cj(p.z); }

json currents_json(const CurrentAssignment& c) { return json(c.values); }

json blowup_json(const BlowupPoint& p) {
    json out;
    out["blocks"] = p.blocks;
    out["coordinates"] = p.coordinates;
    return out;
}

json differential_json(const RationalDifferential& w) {
    json out;
    json poles = json::array();
    for (const auto& p : w.poles()) {
        json a = json::array();
        for (auto x : p.a) a.push_back(cj(x));
        poles.push_back(json{{"point", cj(p.p)}, {"coefficients", a}});
    }
    out["poles"] = poles;
    json poly = json::array();
    for (auto x : w.polynomial()) poly.push_back(cj(x));
    out["polynomial"] = poly;
    return out;
}

json settings_json(const Settings& s) {
    json out;
    out["modes"] = s.modes;
    out["m"] = s.m;
    out["s_values"] = s.s_values;
    out["dump_series"] = s.dump_series;
    out["s_grid"] = s.s_grid;
    return out;
}

RNOptions rn_options(const Settings& s) {
    RNOptions o;
    o.psi.arn.modes = s.modes;
    return o;
}

PlumbedCurve curve_at_s(const Scenario& sc, double s) {
    return PlumbedCurve::from_log(sc.geometry, std::vector<double>(sc.graph().edge_count(), -std::log(s)), sc.arg);
}

const std::vector<double>& require_s_values(const Settings& s, const std::string& command) {
    if (s.s_values.empty())
        fail(ErrorKind::usage, "cli-harness/" + command, "no s-values: give --s-values or plumbing.s_values in the scenario");
    return s.s_values;
}

double residue_scale(const std::vector<SingularPart>& marked) {
    double m = 0.0;
    for (const auto& p : marked)
        for (auto x : p.u) m = std::max(m, std::abs(x));
    return std::max(m, 1.0);
}

// ---------------------------------------------------------------- solve-kirchhoff

void solve_kirchhoff_cmd(const Scenario& sc, const Settings& st, Report& rep) {
    const auto& g = sc.graph();
    const KirchhoffData kd = sc.kirchhoff.value_or(KirchhoffData{});
    LegFlow f = kd.inflows ? *kd.inflows : inflows_of(sc.marked);
    Resistances rho = kd.resistances;
    std::string rho_source = "kirchhoff.resistances";
    if (rho.empty()) {
        if (!st.s_values.empty()) {
            rho.assign(g.edge_count(), -std::log(st.s_values.front()));
            rho_source = "-ln|s| at the first s-value";
        } else if (sc.has_family()) {
            rho = sc.schedule->at(sc.k_grid.front());
            rho_source = "schedule at the first k";
        } else {
            fail(ErrorKind::usage, "cli-harness/solve-kirchhoff", "no resistances: give kirchhoff.resistances or s-values");
        }
    }
    ElectromotiveForce emf;
    emf.values = kd.emf.empty() ? std::vector<double>(g.cycle_rank(), 0.0) : kd.emf;
    const bool no_force = std::all_of(emf.values.begin(), emf.values.end(), [](double x) { return x == 0.0; });
    const bool no_flow = std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; });

    auto c = solve_general(g, f, emf, rho);
    auto res = kirchhoff_residuals(g, f, emf, rho, c);
    double scale = 1.0;
    for (double x : f) scale = std::max(scale, std::abs(x));
    for (double x : emf.values) scale = std::max(scale, std::abs(x));

    rep.results["resistance_source"] = rho_source;
    rep.results["resistances"] = rho;
    rep.results["inflows"] = f;
    rep.results["emf"] = emf.values;
    rep.results["currents"] = currents_json(c);
    rep.results["residuals"] = json{{"conservation", res.conservation}, {"cycle", res.cycle}};
    rep.check("conservation residual", res.conservation <= 1e-10 * scale, res.conservation, 1e-10 * scale);
    rep.check("cycle residual", res.cycle <= 1e-10 * scale, res.cycle, 1e-10 * scale);

    const double cmax = c.max_abs();
    if (no_force) {
        auto lap = solve_flow_laplacian(g, f, rho);
        const double diff = (c - lap).max_abs();
        rep.results["laplacian_difference"] = diff;
        rep.check("mesh and Laplacian solves agree", diff <= 1e-10 * std::max(1.0, cmax), diff, 1e-10 * std::max(1.0, cmax));
        const double fb = flow_bound(f);
        rep.results["flow_bound"] = fb;
        rep.check("flow bound |c_e| <= sum|f|/2", cmax <= fb * (1 + 1e-12) + 1e-15, cmax, fb);
        auto vp = voltage_potential(g, c, rho);
        rep.results["voltage"] = json{{"values", vp.values}, {"order", vp.order}};
    }
    if (no_flow && !no_force) {
        auto fb = force_bound(g, emf, rho);
        rep.results["force_bound"] = json{{"bound", fb.bound}, {"max_loop_force", fb.max_loop_force},
                                          {"simple_loops", fb.simple_loops}, {"enumerated", fb.enumerated}};
        rep.check("force bound |c_e| <= N|E|/min rho", cmax <= fb.bound * (1 + 1e-12) + 1e-15, cmax, fb.bound);
    }

    Table t{"currents", {"edge", "tail", "head", "resistance", "current"}, {}};
    for (std::size_t k = 0; k < g.edge_count(); ++k)
        t.add({k, g.ends(k).first, g.ends(k).second, rho[k], c.values[k]});
    rep.tables.push_back(std::move(t));
}

// ---------------------------------------------------------------- multiscale-limit

void multiscale_cmd(const Scenario& sc, const Settings&, Report& rep) {
    const auto fam = sc.family();
    const auto& g = sc.graph();
    LegFlow f = sc.kirchhoff && sc.kirchhoff->inflows ? *sc.kirchhoff->inflows : inflows_of(sc.marked);
    auto conv = limit_of_flow_solutions(g, f, *sc.schedule, sc.k_grid);
    rep.results["blowup_point"] = blowup_json(conv.point);
    rep.results["limit"] = currents_json(conv.limit);
    rep.results["final_deviation"] = conv.final_deviation;
    rep.results["max_deviation"] = conv.max_deviation;
    rep.results["rate"] = conv.rate;
    Table t{"convergence", {"k", "edge", "current", "limit", "deviation"}, {}};
    for (const auto& row : conv.rows)
        for (std::size_t k = 0; k < row.currents.size(); ++k)
            t.add({row.k, k, row.currents[k], conv.limit.values[k], row.deviation});
    rep.tables.push_back(std::move(t));

    double cons = 0.0;
    {
        // conservation of the limit (the cycle law only holds block by block)
        std::vector<double> net(g.vertex_count(), 0.0);
        for (std::size_t e = 0; e < g.oriented_count(); ++e) net[g.target(e)] += conv.limit.at(e);
        for (std::size_t l = 0; l < g.legs().size(); ++l) net[g.legs()[l].vertex] += f[l];
        for (double x : net) cons = std::max(cons, std::abs(x));
    }
    rep.check("limit conserves the inflows", cons <= 1e-10 * std::max(1.0, flow_bound(f)), cons, 1e-10);
    const double first = conv.rows.front().deviation, last = conv.rows.back().deviation;
    rep.check("deviation shrinks along the grid", last <= first + 1e-15, last, first);
}

// ---------------------------------------------------------------- construct-rn

void construct_cmd(const Scenario& sc, const Settings& st, Report& rep) {
    const auto& g = sc.graph();
    const auto& svals = require_s_values(st, "construct-rn");
    const auto opts = rn_options(st);
    std::vector<RNConstruction> out(svals.size());
    parallel_for(svals.size(), [&](std::size_t i) { out[i] = rn_construct(curve_at_s(sc, svals[i]), sc.marked, opts); });

    const double scale = residue_scale(sc.marked);
    double worst_period = 0.0, worst_seam = 0.0;
    json runs = json::array();
    Table t{"rn", {"s", "edge", "c0", "current", "seam_re", "seam_im", "residue_im"}, {}};
    for (std::size_t i = 0; i < svals.size(); ++i) {
        const auto& r = out[i];
        json run;
        run["s"] = svals[i];
        run["c0"] = currents_json(r.c0);
        run["currents"] = currents_json(r.c);
        run["levels"] = r.levels.size();
        run["level_norms"] = r.level_norms;
        run["stagnated"] = r.stagnated;
        run["direct_difference"] = r.direct_difference;
        run["max_period"] = r.max_period();
        run["gluing_residual"] = r.psi.gluing_residual();
        json periods = json::array();
        for (const auto& p : r.periods)
            periods.push_back(json{{"value", p.value}, {"log_term", p.log_term}, {"finite_part", p.finite_part}});
        run["periods"] = periods;
        worst_period = std::max(worst_period, r.max_period());
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            const cplx seam = seam_integral(r.psi, DualGraph::forward(k));
            worst_seam = std::max(worst_seam, std::abs(seam.imag()));
            t.add({svals[i], k, r.c0.values[k], r.c.values[k], seam.real(), seam.imag(), seam.real() / (2 * M_PI)});
        }
        if (st.dump_series) {
            json lv = json::array();
            for (const auto& c : r.levels) lv.push_back(currents_json(c));
            run["series"] = json{{"levels", lv}, {"emf", r.emf}, {"arn_term_norms", r.psi.correction().term_norms}};
        }
        runs.push_back(run);
    }
    rep.results["runs"] = runs;
    rep.tables.push_back(std::move(t));
    rep.check("Im periods on basis cycles", worst_period <= 1e-8 * scale, worst_period, 1e-8 * scale);
    rep.check("seam integrals are real", worst_seam <= 1e-8 * scale, worst_seam, 1e-8 * scale);
}

// ---------------------------------------------------------------- degenerate

void degenerate_cmd(const Scenario& sc, const Settings& st, Report& rep) {
    const auto fam = sc.family();
    const auto& g = sc.graph();
    const auto grid = solve_family(fam, rn_options(st));
    const auto lim = limit_rn(fam, grid);
    rep.results["blowup_point"] = blowup_json(lim.point);
    rep.results["c_limit"] = currents_json(lim.c_limit);
    json phi = json::array();
    for (const auto& w : lim.phi) phi.push_back(differential_json(w));
    rep.results["limit_differential"] = phi;
    rep.results["final_deviation"] = lim.final_deviation;
    rep.results["monotone_tail"] = lim.monotone_tail;

    Table t{"residues", {"k", "edge", "current", "residue_re", "residue_im", "limit_current", "deviation"}, {}};
    Table p{"periods", {"k", "cycle", "im_period", "log_term", "finite_part"}, {}};
    double scale = lim.c_limit.max_abs();
    for (std::size_t i = 0; i < lim.rows.size(); ++i) {
        const auto& row = lim.rows[i];
        scale = std::max(scale, row.c.max_abs());
        for (std::size_t k = 0; k < g.edge_count(); ++k)
            t.add({row.k, k, row.c.values[k], row.residues[k].real(), row.residues[k].imag(), lim.c_limit.values[k], row.deviation});
        for (std::size_t j = 0; j < grid[i].periods.size(); ++j) {
            const auto& pr = grid[i].periods[j];
            p.add({row.k, j, pr.value, pr.log_term, pr.finite_part});
        }
    }
    rep.tables.push_back(std::move(t));
    rep.tables.push_back(std::move(p));
    rep.check("residue deviation non-increasing over the tail", lim.monotone_tail, lim.final_deviation, 0.0);
    const double thr = 0.05 * scale + 1e-12;
    rep.check("final residue deviation", lim.final_deviation <= thr, lim.final_deviation, thr);
}

// ---------------------------------------------------------------- stratify

struct StratifyOutcome {
    Stratification st;
    std::optional<TwistedLimitDifferential> twisted;
    std::string twisted_error;
};

StratifyOutcome stratify_family(const Scenario& sc, const Settings& s, const std::vector<RNConstruction>& grid) {
    DegenOptions o;
    o.rn = rn_options(s);
    o.m = s.m;
    StratifyOutcome out{stratify(sc.family(), grid, o), std::nullopt, {}};
    try {
        out.twisted = twisted_limit(out.st, o.order_tolerance);
    } catch (const Error& e) {
        out.twisted_error = e.what();
    }
    return out;
}

void stratify_cmd(const Scenario& sc, const Settings& s, Report& rep) {
    const auto fam = sc.family();
    const auto grid = solve_family(fam, rn_options(s));
    const auto res = stratify_family(sc, s, grid);
    const auto& st = res.st;
    rep.results["m"] = st.m;
    rep.results["m0"] = st.m0;
    rep.results["jet_convergent"] = st.jet_convergent;
    rep.results["level_of"] = st.level_of;
    json strata = json::array();
    Table tab{"strata", {"lambda", "vertices", "mu_slope", "mu_intercept", "separation_slope", "sum_m_e", "stabilized",
                         "stabilization_defect", "scaled_consistency"}, {}};
    bool sum_ok = true, sep_ok = true, cons_ok = true;
    double worst_cons = 0.0, min_sep = 1e300;
    for (std::size_t l = 0; l < st.strata.size(); ++l) {
        const auto& step = st.strata[l];
        json j;
        j["vertices"] = step.vertices;
        j["log_mu"] = step.log_mu;
        j["mu_fit"] = json{{"slope", step.mu_fit.slope}, {"intercept", step.mu_fit.intercept}};
        j["boundary"] = step.boundary;
        j["boundary_orders"] = step.boundary_orders;
        j["stabilized"] = step.stabilized;
        j["stabilization_defect"] = step.stabilization_defect;
        j["scaled_consistency"] = step.scaled_consistency;
        json phi = json::object();
        for (auto v : step.vertices) phi[std::to_string(v)] = differential_json(step.phi[v]);
        j["phi"] = phi;
        strata.push_back(j);
        int sum = 0;
        for (int me : step.boundary_orders) sum += me;
        sum_ok = sum_ok && sum <= st.m0;
        const double sep = l ? st.separation_slope(l) : 0.0;
        if (l) {
            sep_ok = sep_ok && sep > 0.0;
            min_sep = std::min(min_sep, sep);
        }
        cons_ok = cons_ok && step.scaled_consistency <= 1e-4;
        worst_cons = std::max(worst_cons, step.scaled_consistency);
        std::string verts;
        for (auto v : step.vertices) verts += (verts.empty() ? "" : " ") + std::to_string(v);
        tab.add({l, verts, step.mu_fit.slope, step.mu_fit.intercept, l ? json(sep) : json(nullptr), sum, step.stabilized,
                 step.stabilization_defect, step.scaled_consistency});
    }
    rep.results["strata"] = strata;
    rep.tables.push_back(std::move(tab));
    rep.check("jet-convergent on the grid", st.jet_convergent, 0.0, 0.0);
    rep.check("sum of m_e <= m0 at every step", sum_ok, st.m0, st.m0);
    rep.check("scale separation slopes positive", sep_ok, st.strata.size() > 1 ? min_sep : 0.0, 0.0);
    rep.check("scaled-limit consistency", cons_ok, worst_cons, 1e-4);

    rep.check("pole bound ord >= -m_e - 2", res.twisted.has_value(), 0.0, 0.0, res.twisted_error);
    if (res.twisted) {
        const auto& tw = *res.twisted;
        json z = json::array();
        for (const auto& x : tw.zeros) z.push_back(json{{"component", x.component}, {"point", point_json(x.point)}, {"multiplicity", x.multiplicity}});
        json n = json::array();
        Table nt{"twisted_nodes", {"edge", "ord_forward", "ord_backward", "multiplicity"}, {}};
        for (const auto& x : tw.nodes) {
            n.push_back(json{{"edge", x.edge}, {"ord_forward", x.ord_forward}, {"ord_backward", x.ord_backward}, {"multiplicity", x.multiplicity}});
            nt.add({x.edge, x.ord_forward, x.ord_backward, x.multiplicity});
        }
        rep.results["twisted"] = json{{"stratum", tw.stratum}, {"zeros", z}, {"nodes", n}, {"marked_multiplicity", tw.marked_multiplicity},
                                      {"degree", tw.degree}, {"expected_degree", tw.expected_degree}, {"nonnegative", tw.nonnegative}};
        rep.tables.push_back(std::move(nt));
        rep.check("twisted divisor degree = 2g-2+sum(m_l+1)", tw.degree == tw.expected_degree, tw.degree, tw.expected_degree);
        rep.check("node multiplicities non-negative", tw.nonnegative, 0.0, 0.0);
    }
}

// ---------------------------------------------------------------- track-zeros

void track_cmd(const Scenario& sc, const Settings& s, Report& rep) {
    const auto& g = sc.graph();
    const bool family = sc.has_family() && !(s.s_grid && !s.s_values.empty());
    std::vector<double> points;
    std::vector<PlumbedCurve> curves;
    std::vector<RNConstruction> grid;
    std::optional<TwistedLimitDifferential> twisted;
    if (family) {
        const auto fam = sc.family();
        points = fam.k_grid;
        grid = solve_family(fam, rn_options(s));
        for (double k : points) curves.push_back(fam.curve_at(k));
        auto res = stratify_family(sc, s, grid);
        twisted = res.twisted;
        rep.check("twisted limit available", twisted.has_value(), 0.0, 0.0, res.twisted_error);
    } else {
        points = require_s_values(s, "track-zeros");
        for (double x : points) curves.push_back(curve_at_s(sc, x));
        grid.resize(points.size());
        const auto opts = rn_options(s);
        parallel_for(points.size(), [&](std::size_t i) { grid[i] = rn_construct(curves[i], sc.marked, opts); });
    }
    std::vector<ZeroTrack> tracks(points.size());
    parallel_for(points.size(), [&](std::size_t i) { tracks[i] = track_zeros(grid[i].psi, sc.marked); });

    const char* key = family ? "k" : "s";
    Table zt{"zeros", {key, "log_abs_s", "component", "re", "im", "at_infinity", "multiplicity", "nearest_predicted"}, {}};
    Table at{"annuli", {key, "edge", "radius", "winding_forward", "winding_backward", "count", "predicted"}, {}};
    Table tt{"totals", {key, "total", "expected", "consistent"}, {}};
    bool totals_ok = true, located_ok = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& tr = tracks[i];
        // ln max_e |s_e|
        const double las = curves[i].log_modulus.empty() ? 0.0 : -*std::min_element(curves[i].log_modulus.begin(), curves[i].log_modulus.end());
        for (const auto& z : tr.zeros) {
            json nearest = nullptr;
            if (twisted && !z.point.at_infinity) {
                double best = 1e300;
                for (const auto& p : twisted->zeros)
                    if (p.component == z.component && !p.point.at_infinity) best = std::min(best, std::abs(p.point.z - z.point.z));
                if (best < 1e300) nearest = best;
            }
            zt.add({points[i], las, z.component, z.point.at_infinity ? 0.0 : z.point.z.real(),
                    z.point.at_infinity ? 0.0 : z.point.z.imag(), z.point.at_infinity, z.multiplicity, nearest});
        }
        for (const auto& a : tr.annuli)
            at.add({points[i], a.edge, a.radius, a.winding_forward, a.winding_backward, a.count,
                    twisted ? json(twisted->nodes[a.edge].multiplicity) : json(nullptr)});
        tt.add({points[i], tr.total, tr.expected, tr.consistent});
        totals_ok = totals_ok && tr.total == tr.expected;
        located_ok = located_ok && tr.consistent;
    }
    rep.check("zero count = 2g-2+sum(m_l+1) at every point", totals_ok, tracks.back().total, tracks.back().expected);
    rep.check("located zeros match the argument-principle counts", located_ok, 0.0, 0.0);
    if (twisted) {
        bool match = true;
        for (const auto& a : tracks.back().annuli) match = match && a.count == twisted->nodes[a.edge].multiplicity;
        rep.check("annulus counts at the smallest s equal the twisted node multiplicities", match, 0.0, 0.0);
        rep.check("twisted divisor degree", twisted->degree == twisted->expected_degree, twisted->degree, twisted->expected_degree);
    }
    rep.results["expected"] = tracks.back().expected;
    rep.results["points"] = points;
    json totals = json::array();
    for (const auto& tr : tracks) totals.push_back(tr.total);
    rep.results["totals"] = totals;
    rep.tables.push_back(std::move(tt));
    rep.tables.push_back(std::move(zt));
    rep.tables.push_back(std::move(at));
    (void)g;
}

// ---------------------------------------------------------------- verify

void verify_cmd(const Scenario& sc, const Settings& s, Report& rep) {
    if (sc.graph().cycle_rank() != 0)
        fail(ErrorKind::usage, "cli-harness/verify", "verify compares against the global-sphere oracle and needs a tree");
    const auto& svals = require_s_values(s, "verify");
    const auto opts = rn_options(s);
    std::vector<OracleComparison> cmp(svals.size());
    parallel_for(svals.size(), [&](std::size_t i) {
        const auto curve = curve_at_s(sc, svals[i]);
        const auto r = rn_construct(curve, sc.marked, opts);
        cmp[i] = compare_with_tree_oracle(curve, sc.marked, r.psi);
    });
    Table t{"oracle", {"s", "probes", "max_abs_error", "scale", "rel_error"}, {}};
    double worst = 0.0;
    for (std::size_t i = 0; i < svals.size(); ++i) {
        t.add({svals[i], cmp[i].probes, cmp[i].max_abs_error, cmp[i].scale, cmp[i].rel_error});
        worst = std::max(worst, cmp[i].rel_error);
    }
    rep.tables.push_back(std::move(t));
    rep.results["max_rel_error"] = worst;
    rep.check("rn_construct matches the global-sphere oracle", worst <= 1e-7, worst, 1e-7);
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"solve-kirchhoff", "multiscale-limit", "construct-rn", "degenerate",
                                                "stratify",        "track-zeros",      "verify"};
    return names;
}

bool is_command(const std::string& name) {
    const auto& n = command_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

Report run(const std::string& command, const Scenario& sc, const Settings& settings) {
    if (!is_command(command)) {
        std::string list;
        for (const auto& n : command_names()) list += (list.empty() ? "" : ", ") + n;
        fail(ErrorKind::usage, "cli-harness/run", "unknown command '" + command + "' (expected one of: " + list + ")");
    }
    Report rep;
    rep.command = command;
    rep.scenario = sc.name;
    rep.settings = settings_json(settings);
    if (command == "solve-kirchhoff") solve_kirchhoff_cmd(sc, settings, rep);
    else if (command == "multiscale-limit") multiscale_cmd(sc, settings, rep);
    else if (command == "construct-rn") construct_cmd(sc, settings, rep);
    else if (command == "degenerate") degenerate_cmd(sc, settings, rep);
    else if (command == "stratify") stratify_cmd(sc, settings, rep);
    else if (command == "track-zeros") track_cmd(sc, settings, rep);
    else verify_cmd(sc, settings, rep);
    return rep;
}

std::vector<cplx> probe_grid(const CurveGeometry& geo, std::size_t v, std::size_t count, double keep_out) {
    const auto& g = geo.graph();
    std::vector<cplx> centers;
    std::vector<double> radii;
    for (auto e : g.incoming(v)) {
        centers.push_back(geo.node_point(e));
        radii.push_back(keep_out * geo.chart_scale(e));
    }
    for (auto l : g.legs_at(v))
        if (!geo.marked_point(l).at_infinity) {
            centers.push_back(geo.marked_point(l).z);
            radii.push_back(keep_out * geo.marked_chart(l).scale);
        }
    cplx mid{};
    for (auto c : centers) mid += c;
    if (!centers.empty()) mid /= static_cast<double>(centers.size());
    double half = 1.5;
    for (auto c : centers) half = std::max(half, 1.2 * std::abs(c - mid));
    std::vector<cplx> out;
    // grow the lattice until enough points survive the keep-out disks
    for (std::size_t n = 10; out.size() < count && n <= 40; n += 2) {
        out.clear();
        for (std::size_t i = 0; i < n && out.size() < count; ++i)
            for (std::size_t j = 0; j < n && out.size() < count; ++j) {
                // offset so no probe lands exactly on a symmetric special point
                const cplx z = mid + cplx(-half + 2 * half * (i + 0.37) / n, -half + 2 * half * (j + 0.61) / n);
                bool ok = true;
                for (std::size_t c = 0; c < centers.size(); ++c) ok = ok && std::abs(z - centers[c]) > radii[c];
                if (ok) out.push_back(z);
            }
    }
    return out;
}

OracleComparison compare_with_tree_oracle(const PlumbedCurve& curve, const std::vector<SingularPart>& marked,
                                          const GluedDifferential& psi) {
    oracle::TreeOracle oracle(curve, marked);
    OracleComparison out;
    for (std::size_t v = 0; v < curve.graph().vertex_count(); ++v)
        for (cplx z : probe_grid(curve.geometry, v)) {
            const cplx want = oracle(v, z);
            out.scale = std::max(out.scale, std::abs(want));
            out.max_abs_error = std::max(out.max_abs_error, std::abs(psi(v, z) - want));
            ++out.probes;
        }
    out.rel_error = out.scale > 0.0 ? out.max_abs_error / out.scale : out.max_abs_error;
    return out;
}

}  // namespace rn::harness
