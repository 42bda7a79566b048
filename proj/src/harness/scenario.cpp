#include "harness/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "util/error.hpp"

namespace rn::harness {

namespace {

using json = nlohmann::ordered_json;

std::optional<cplx> as_complex(const json& v) {
    if (v.is_number()) return cplx(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
    return std::nullopt;
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

struct Collector {
    std::vector<std::string> errors;
    void add(std::string s) { errors.push_back(std::move(s)); }
};

std::optional<std::vector<double>> number_list(const json& doc, const char* key, const std::string& path, Collector& out) {
    if (!doc.contains(key)) return std::nullopt;
    const auto& v = doc.at(key);
    if (!v.is_array()) {
        out.add(path + "." + key + ": expected an array of numbers");
        return std::nullopt;
    }
    std::vector<double> xs;
    for (const auto& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
            out.add(path + "." + key + ": expected finite numbers");
            return std::nullopt;
        }
        xs.push_back(x.get<double>());
    }
    return xs;
}

std::string point_name(cplx z) {
    std::ostringstream s;
    s << "(" << z.real() << ", " << z.imag() << ")";
    return s.str();
}

}  // namespace

std::vector<cplx> to_chart_coefficients(const std::vector<cplx>& global, double scale) {
    std::vector<cplx> u(global.size());
    double p = 1.0;
    for (std::size_t k = 0; k < global.size(); ++k) {
        u[k] = global[k] / p;
        p *= scale;
    }
    return u;
}

DegeneratingFamily Scenario::family() const {
    if (!has_family())
        fail(ErrorKind::usage, "cli-harness/scenario", "scenario '" + name + "' has no resistance schedule and k-grid");
    DegeneratingFamily f;
    f.geometry = geometry;
    f.schedule = *schedule;
    f.arg = arg;
    f.marked = marked;
    f.k_grid = k_grid;
    f.validate();
    return f;
}

std::vector<std::string> validate_scenario(const json& doc) {
    Collector out;
    if (!doc.is_object()) return {"scenario: expected a JSON object"};
    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
        out.add("schema_version: missing");
    else if (doc["schema_version"].get<int>() != kSchemaVersion)
        out.add("schema_version: unsupported version " + doc["schema_version"].dump() + " (supported: 1)");

    // graph
    std::size_t V = 0, E = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::size_t> leg_vertex;
    std::vector<std::string> labels;
    bool graph_ok = false;
    if (!doc.contains("graph") || !doc["graph"].is_object()) {
        out.add("graph: missing");
    } else {
        const auto& g = doc["graph"];
        const std::size_t before = out.errors.size();
        if (!g.contains("vertices") || !g["vertices"].is_number_unsigned() || g["vertices"].get<std::size_t>() == 0)
            out.add("graph.vertices: expected a positive integer");
        else
            V = g["vertices"].get<std::size_t>();
        if (g.contains("edges") && !g["edges"].is_array()) out.add("graph.edges: expected an array");
        if (g.contains("edges") && g["edges"].is_array())
            for (std::size_t k = 0; k < g["edges"].size(); ++k) {
                const auto& e = g["edges"][k];
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned()) {
                    out.add("graph.edges[" + std::to_string(k) + "]: expected [a, b]");
                    continue;
                }
                const auto a = e[0].get<std::size_t>(), b = e[1].get<std::size_t>();
                if (a >= V || b >= V) out.add("graph.edges[" + std::to_string(k) + "]: vertex out of range");
                if (a == b) out.add("graph.edges[" + std::to_string(k) + "]: self-loops are not supported on rational components");
                edges.emplace_back(a, b);
            }
        if (g.contains("legs") && !g["legs"].is_array()) out.add("graph.legs: expected an array");
        if (g.contains("legs") && g["legs"].is_array())
            for (std::size_t l = 0; l < g["legs"].size(); ++l) {
                const auto& leg = g["legs"][l];
                if (!leg.is_object() || !leg.contains("vertex") || !leg["vertex"].is_number_unsigned() ||
                    !leg.contains("label") || !leg["label"].is_string()) {
                    out.add("graph.legs[" + std::to_string(l) + "]: expected {\"vertex\": v, \"label\": name}");
                    continue;
                }
                if (leg["vertex"].get<std::size_t>() >= V) out.add("graph.legs[" + std::to_string(l) + "]: vertex out of range");
                leg_vertex.push_back(leg["vertex"].get<std::size_t>());
                labels.push_back(leg["label"].get<std::string>());
            }
        std::set<std::string> seen;
        for (const auto& s : labels)
            if (!seen.insert(s).second) out.add("graph.legs: duplicate label '" + s + "'");
        E = edges.size();
        if (out.errors.size() == before) {
            std::vector<Leg> legs;
            for (std::size_t l = 0; l < labels.size(); ++l) legs.push_back({leg_vertex[l], labels[l]});
            try {
                auto dg = DualGraph::build(V, edges, legs);
                if (!dg.connected()) out.add("graph: the dual graph must be connected");
                else graph_ok = true;
            } catch (const Error& e) {
                out.add(std::string("graph: ") + e.what());
            }
        }
    }

    // geometry
    std::vector<cplx> q;
    std::vector<std::optional<cplx>> p;  // nullopt = ∞
    std::vector<double> r_given, leg_scales;
    bool geometry_ok = false;
    if (!doc.contains("geometry") || !doc["geometry"].is_object()) {
        out.add("geometry: missing");
    } else if (graph_ok) {
        const auto& geo = doc["geometry"];
        const std::size_t before = out.errors.size();
        if (!geo.contains("node_points") || !geo["node_points"].is_array() || geo["node_points"].size() != 2 * E) {
            out.add("geometry.node_points: expected " + std::to_string(2 * E) + " points (q_{2k}, q_{2k+1} per edge)");
        } else {
            for (std::size_t e = 0; e < 2 * E; ++e) {
                auto z = as_complex(geo["node_points"][e]);
                if (!z || !finite(*z)) out.add("geometry.node_points[" + std::to_string(e) + "]: expected a finite [re, im]");
                q.push_back(z.value_or(cplx{}));
            }
        }
        if (!geo.contains("marked_points") || !geo["marked_points"].is_array() || geo["marked_points"].size() != labels.size()) {
            out.add("geometry.marked_points: expected " + std::to_string(labels.size()) + " points (one per leg)");
        } else {
            for (std::size_t l = 0; l < labels.size(); ++l) {
                const auto& v = geo["marked_points"][l];
                if (v.is_string() && v.get<std::string>() == "inf") {
                    p.emplace_back(std::nullopt);
                    continue;
                }
                auto z = as_complex(v);
                if (!z || !finite(*z)) out.add("geometry.marked_points[" + std::to_string(l) + "]: expected [re, im] or \"inf\"");
                p.emplace_back(z.value_or(cplx{}));
            }
        }
        if (auto r = number_list(geo, "chart_scales", "geometry", out)) {
            if (r->size() != 2 * E) out.add("geometry.chart_scales: expected one scale per oriented edge");
            for (double x : *r)
                if (!(x > 0.0)) out.add("geometry.chart_scales: scales must be positive");
            r_given = *r;
        }
        if (auto r = number_list(geo, "leg_scales", "geometry", out)) {
            if (r->size() != labels.size()) out.add("geometry.leg_scales: expected one scale per leg");
            for (double x : *r)
                if (!(x > 0.0)) out.add("geometry.leg_scales: scales must be positive");
            leg_scales = *r;
        }
        if (out.errors.size() == before) {
            // disjointness per component: node chart disks against each other and against marked points
            auto g = DualGraph::build(V, edges, {});
            for (std::size_t v = 0; v < V; ++v) {
                const auto& in = g.incoming(v);
                std::vector<std::size_t> legs_here;
                for (std::size_t l = 0; l < labels.size(); ++l)
                    if (leg_vertex[l] == v) legs_here.push_back(l);
                std::vector<double> radius;
                for (auto e : in) {
                    double nearest = 1e300;
                    for (auto f : in)
                        if (f != e) nearest = std::min(nearest, std::abs(q[e] - q[f]));
                    for (auto l : legs_here)
                        if (p[l]) nearest = std::min(nearest, std::abs(q[e] - *p[l]));
                    radius.push_back(r_given.empty() ? (nearest < 1e300 ? 0.4 * nearest : 1.0) : r_given[e]);
                }
                for (std::size_t i = 0; i < in.size(); ++i) {
                    for (std::size_t j = i + 1; j < in.size(); ++j)
                        if (std::abs(q[in[i]] - q[in[j]]) <= radius[i] + radius[j])
                            out.add("geometry: node point q_" + std::to_string(in[i]) + " " + point_name(q[in[i]]) +
                                    " and node point q_" + std::to_string(in[j]) + " " + point_name(q[in[j]]) +
                                    " on component " + std::to_string(v) + " have overlapping chart disks");
                    for (auto l : legs_here)
                        if (p[l] && std::abs(*p[l] - q[in[i]]) <= radius[i])
                            out.add("geometry: marked point '" + labels[l] + "' " + point_name(*p[l]) +
                                    " lies inside the chart disk of node point q_" + std::to_string(in[i]) + " " +
                                    point_name(q[in[i]]) + " (radius " + std::to_string(radius[i]) + ") on component " +
                                    std::to_string(v));
                }
                for (std::size_t a = 0; a < legs_here.size(); ++a)
                    for (std::size_t b = a + 1; b < legs_here.size(); ++b) {
                        const auto& pa = p[legs_here[a]];
                        const auto& pb = p[legs_here[b]];
                        if ((!pa && !pb) || (pa && pb && *pa == *pb))
                            out.add("geometry: marked points '" + labels[legs_here[a]] + "' and '" + labels[legs_here[b]] +
                                    "' coincide on component " + std::to_string(v));
                    }
            }
            geometry_ok = out.errors.size() == before;
        }
    }

    // singular parts
    double residue_sum = 0.0, residue_scale = 0.0;
    if (doc.contains("singular_parts")) {
        const auto& sp = doc["singular_parts"];
        if (!sp.is_array()) {
            out.add("singular_parts: expected an array");
        } else {
            std::set<std::string> used;
            for (std::size_t i = 0; i < sp.size(); ++i) {
                const std::string path = "singular_parts[" + std::to_string(i) + "]";
                const auto& part = sp[i];
                if (!part.is_object() || !part.contains("leg") || !part["leg"].is_string() || !part.contains("u") ||
                    !part["u"].is_array()) {
                    out.add(path + ": expected {\"leg\": label, \"u\": [[re, im], ...]}");
                    continue;
                }
                const auto label = part["leg"].get<std::string>();
                if (std::find(labels.begin(), labels.end(), label) == labels.end()) out.add(path + ": unknown leg '" + label + "'");
                if (!used.insert(label).second) out.add(path + ": leg '" + label + "' given twice");
                std::vector<cplx> u;
                for (const auto& x : part["u"]) {
                    auto z = as_complex(x);
                    if (!z || !finite(*z)) {
                        out.add(path + ".u: expected finite [re, im] coefficients");
                        break;
                    }
                    u.push_back(*z);
                }
                if (u.empty()) continue;
                const double scale = std::max(1.0, std::abs(u[0]));
                if (std::abs(u[0].real()) > 1e-12 * scale)
                    out.add(path + ": residue " + point_name(u[0]) + " at '" + label +
                            "' is not purely imaginary; real-normalized differentials need imaginary residues");
                residue_sum += u[0].imag();
                residue_scale = std::max(residue_scale, std::abs(u[0]));
            }
        }
    }
    if (std::abs(residue_sum) > 1e-10 * std::max(1.0, residue_scale))
        out.add("singular_parts: residues sum to " + std::to_string(residue_sum) + "i; they must sum to zero on a connected curve");

    // plumbing and families
    if (doc.contains("plumbing")) {
        const auto& pl = doc["plumbing"];
        if (!pl.is_object()) {
            out.add("plumbing: expected an object");
        } else {
            if (auto s = number_list(pl, "s_values", "plumbing", out))
                for (double x : *s)
                    if (!(x > 0.0 && x < 1.0)) out.add("plumbing.s_values: need 0 < |s| < 1");
            if (auto a = number_list(pl, "arg", "plumbing", out))
                if (graph_ok && a->size() != E) out.add("plumbing.arg: expected one phase per edge");
            if (auto k = number_list(pl, "k_grid", "plumbing", out)) {
                if (k->empty()) out.add("plumbing.k_grid: empty");
                for (std::size_t i = 1; i < k->size(); ++i)
                    if (!((*k)[i] > (*k)[i - 1])) out.add("plumbing.k_grid: must be strictly increasing");
            }
            if (pl.contains("schedule")) {
                const auto& sc = pl["schedule"];
                const std::string kind = sc.is_object() && sc.contains("kind") && sc["kind"].is_string() ? sc["kind"].get<std::string>() : "";
                if (kind == "parametric") {
                    auto a = number_list(sc, "alpha", "plumbing.schedule", out);
                    auto b = number_list(sc, "beta", "plumbing.schedule", out);
                    if (!a || !b || (graph_ok && (a->size() != E || b->size() != E)))
                        out.add("plumbing.schedule: parametric schedules need alpha and beta per edge");
                } else if (kind == "table") {
                    auto k = number_list(sc, "k", "plumbing.schedule", out);
                    if (!k || !sc.contains("values") || !sc["values"].is_array() || (graph_ok && sc["values"].size() != E))
                        out.add("plumbing.schedule: table schedules need k and one row of values per edge");
                } else {
                    out.add("plumbing.schedule.kind: expected \"parametric\" or \"table\"");
                }
            }
        }
    }

    if (doc.contains("kirchhoff")) {
        const auto& kd = doc["kirchhoff"];
        if (!kd.is_object()) {
            out.add("kirchhoff: expected an object");
        } else {
            if (auto r = number_list(kd, "resistances", "kirchhoff", out)) {
                if (graph_ok && r->size() != E) out.add("kirchhoff.resistances: expected one value per edge");
                for (double x : *r)
                    if (!(x > 0.0)) out.add("kirchhoff.resistances: must be positive");
            }
            if (auto f = number_list(kd, "inflows", "kirchhoff", out)) {
                if (f->size() != labels.size()) out.add("kirchhoff.inflows: expected one value per leg");
                double sum = 0.0, big = 0.0;
                for (double x : *f) {
                    sum += x;
                    big = std::max(big, std::abs(x));
                }
                if (std::abs(sum) > 1e-10 * std::max(1.0, big)) out.add("kirchhoff.inflows: must sum to zero");
            }
            if (auto emf = number_list(kd, "emf", "kirchhoff", out))
                if (graph_ok && emf->size() != E + 1 - V) out.add("kirchhoff.emf: expected one value per basis cycle");
        }
    }

    if (doc.contains("settings")) {
        const auto& st = doc["settings"];
        if (!st.is_object()) out.add("settings: expected an object");
        else {
            if (st.contains("modes") && (!st["modes"].is_number_unsigned() || st["modes"].get<std::size_t>() < 4))
                out.add("settings.modes: expected an integer >= 4");
            if (st.contains("m") && !st["m"].is_number_unsigned()) out.add("settings.m: expected a non-negative integer");
        }
    }
    (void)geometry_ok;
    return out.errors;
}

Scenario parse_scenario_text(const std::string& text) {
    constexpr const char* where = "cli-harness/parse_scenario";
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, where, std::string("malformed JSON: ") + e.what());
    }
    auto errors = validate_scenario(doc);
    if (!errors.empty()) {
        std::string msg = std::to_string(errors.size()) + " validation error(s)";
        for (const auto& e : errors) msg += "\n  " + e;
        fail(ErrorKind::validation, where, msg);
    }

    Scenario sc;
    sc.document = doc;
    sc.name = doc.value("name", std::string("scenario"));
    const auto& g = doc["graph"];
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (g.contains("edges"))
        for (const auto& e : g["edges"]) edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    std::vector<Leg> legs;
    if (g.contains("legs"))
        for (const auto& l : g["legs"]) legs.push_back({l["vertex"].get<std::size_t>(), l["label"].get<std::string>()});
    auto graph = DualGraph::build(g["vertices"].get<std::size_t>(), edges, legs);

    const auto& geo = doc["geometry"];
    std::vector<cplx> q;
    for (const auto& z : geo["node_points"]) q.push_back(*as_complex(z));
    std::vector<SpecialPoint> p;
    for (const auto& z : geo["marked_points"])
        p.push_back(z.is_string() ? SpecialPoint::infinity() : SpecialPoint::finite(*as_complex(z)));
    std::vector<double> r, ls;
    if (geo.contains("chart_scales")) r = geo["chart_scales"].get<std::vector<double>>();
    if (geo.contains("leg_scales")) ls = geo["leg_scales"].get<std::vector<double>>();
    try {
        sc.geometry = CurveGeometry::build(graph, q, p, r, ls);
    } catch (const Error& e) {
        fail(ErrorKind::validation, where, std::string("1 validation error(s)\n  geometry: ") + e.what());
    }

    sc.parts.assign(legs.size(), {});
    if (doc.contains("singular_parts"))
        for (const auto& part : doc["singular_parts"]) {
            const std::size_t l = sc.graph().leg_index(part["leg"].get<std::string>());
            for (const auto& x : part["u"]) sc.parts[l].push_back(*as_complex(x));
        }
    std::vector<std::vector<cplx>> chart(legs.size());
    for (std::size_t l = 0; l < legs.size(); ++l)
        chart[l] = to_chart_coefficients(sc.parts[l], sc.geometry.marked_chart(l).scale);
    sc.marked = bind_marked_parts(sc.geometry, chart);

    if (doc.contains("plumbing")) {
        const auto& pl = doc["plumbing"];
        if (pl.contains("s_values")) sc.settings.s_values = pl["s_values"].get<std::vector<double>>();
        if (pl.contains("arg")) sc.arg = pl["arg"].get<std::vector<double>>();
        if (pl.contains("k_grid")) sc.k_grid = pl["k_grid"].get<std::vector<double>>();
        if (pl.contains("schedule")) {
            const auto& s = pl["schedule"];
            if (s["kind"] == "parametric")
                sc.schedule = ResistanceSchedule::parametric(s["alpha"].get<std::vector<double>>(), s["beta"].get<std::vector<double>>());
            else
                sc.schedule = ResistanceSchedule::tabulated(s["k"].get<std::vector<double>>(),
                                                            s["values"].get<std::vector<std::vector<double>>>());
            try {
                sc.schedule->validate();
            } catch (const Error& e) {
                fail(ErrorKind::validation, where, std::string("1 validation error(s)\n  plumbing.schedule: ") + e.what());
            }
        }
    }
    if (doc.contains("kirchhoff")) {
        const auto& kd = doc["kirchhoff"];
        KirchhoffData k;
        if (kd.contains("resistances")) k.resistances = kd["resistances"].get<std::vector<double>>();
        if (kd.contains("emf")) k.emf = kd["emf"].get<std::vector<double>>();
        if (kd.contains("inflows")) k.inflows = kd["inflows"].get<std::vector<double>>();
        sc.kirchhoff = k;
    }
    if (doc.contains("settings")) {
        const auto& st = doc["settings"];
        if (st.contains("modes")) sc.settings.modes = st["modes"].get<std::size_t>();
        if (st.contains("m")) sc.settings.m = st["m"].get<std::size_t>();
    }
    if (sc.has_family()) {
        try {
            (void)sc.family();
        } catch (const Error& e) {
            fail(ErrorKind::validation, where, std::string("1 validation error(s)\n  plumbing: ") + e.what());
        }
    }
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cli-harness/parse_scenario", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

}  // namespace rn::harness
