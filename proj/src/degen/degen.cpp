#include "degen/degen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

#include "util/error.hpp"
#include "util/parallel.hpp"

namespace rn {
namespace {

const cplx I(0.0, 1.0);
constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::vector<std::size_t>> induced_components(const DualGraph& g, const std::vector<std::size_t>& vertices) {
    std::vector<std::size_t> parent(g.vertex_count());
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<bool> in(g.vertex_count(), false);
    for (auto v : vertices) in.at(v) = true;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        auto [a, b] = g.ends(k);
        if (in[a] && in[b]) parent[find(a)] = find(b);
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    std::vector<std::size_t> sorted = vertices;
    std::sort(sorted.begin(), sorted.end());
    for (auto v : sorted) groups[find(v)].push_back(v);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, vs] : groups) out.push_back(vs);
    std::sort(out.begin(), out.end());
    return out;
}

ResistanceSchedule sub_schedule(const ResistanceSchedule& s, const std::vector<std::size_t>& edges) {
    if (s.kind == ResistanceSchedule::Kind::parametric) {
        std::vector<double> a, b;
        for (auto k : edges) {
            a.push_back(s.alpha.at(k));
            b.push_back(s.beta.at(k));
        }
        return ResistanceSchedule::parametric(a, b);
    }
    std::vector<std::vector<double>> t;
    for (auto k : edges) t.push_back(s.table.at(k));
    return ResistanceSchedule::tabulated(s.samples_k, t);
}

PlumbedCurve sub_plumbed(const PlumbedCurve& c, const CurveGeometry::Subcurve& sub) {
    std::vector<double> L, a;
    for (auto k : sub.edge_origin) {
        L.push_back(c.log_modulus.at(k));
        a.push_back(c.arg.at(k));
    }
    return PlumbedCurve::from_log(sub.geometry, L, a);
}

// RN differentials on the plumbed pieces of a vertex subset, with residue i c_e at every external node.
struct PieceSolution {
    std::vector<GluedDifferential> psi;
    std::vector<std::size_t> piece_of, local_of;

    cplx operator()(std::size_t v, cplx z) const { return psi.at(piece_of.at(v))(local_of.at(v), z); }
};

PieceSolution solve_pieces(const PlumbedCurve& full, const std::vector<std::vector<std::size_t>>& pieces,
                           const std::vector<SingularPart>& marked, const CurrentAssignment& c, const RNOptions& opts) {
    PieceSolution out;
    const std::size_t V = full.graph().vertex_count();
    out.piece_of.assign(V, npos);
    out.local_of.assign(V, npos);
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        auto sub = full.geometry.restrict_to(pieces[p]);
        std::vector<SingularPart> parts;
        for (std::size_t l = 0; l < sub.leg_origin.size(); ++l) {
            const LocalChart chart = sub.geometry.marked_chart(l);
            if (sub.leg_origin[l] != npos)
                parts.push_back({chart, marked.at(sub.leg_origin[l]).u});
            else
                parts.push_back({chart, {I * c.at(sub.leg_node_origin[l])}});
        }
        out.psi.push_back(rn_construct(sub_plumbed(full, sub), parts, opts).psi);
        for (std::size_t i = 0; i < sub.vertex_origin.size(); ++i) {
            out.piece_of[sub.vertex_origin[i]] = p;
            out.local_of[sub.vertex_origin[i]] = i;
        }
    }
    return out;
}

// u_{−1}, …, u_{m−1} of g(z)dz in the chart, by the trapezoid rule on |t| = R.
Jet contour_jet(const std::function<cplx(cplx)>& g, const LocalChart& chart, std::size_t m, double R, std::size_t M) {
    Jet j{chart, std::vector<cplx>(m + 1)};
    const cplx q = chart.center.z;
    const double r = chart.scale;
    for (std::size_t i = 0; i < M; ++i) {
        const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(M);
        const cplx t = std::polar(R, th);
        const cplx h = g(q + r * t) * r;
        for (std::size_t k = 0; k <= m; ++k) {
            const int n = static_cast<int>(k) - 1;
            j.u[k] += h * std::polar(std::pow(R, -n), -n * th);
        }
    }
    for (auto& x : j.u) x /= static_cast<double>(M);
    return j;
}

double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (auto x : v) m = std::max(m, std::abs(x));
    return m;
}

double pieces_scale(const std::vector<RationalDifferential>& phi, const std::vector<std::size_t>& vertices) {
    double m = 0.0;
    for (auto v : vertices) m = std::max(m, phi.at(v).coefficient_scale());
    return m;
}

// Winding number of the chart density of w on |z_e| = e^{logR}; empty when the contour passes too close to a zero.
std::optional<int> contour_winding(const GluedDifferential& w, std::size_t e, double logR, std::size_t samples,
                                   double clearance) {
    for (std::size_t M = samples; M <= 65536; M *= 2) {
        std::vector<cplx> d(M);
        double hi = 0.0, lo = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < M; ++i) {
            d[i] = w.chart_density(e, logR, kTwoPi * static_cast<double>(i) / static_cast<double>(M));
            hi = std::max(hi, std::abs(d[i]));
            lo = std::min(lo, std::abs(d[i]));
        }
        if (!(hi > 0.0) || lo < clearance * hi) return std::nullopt;
        double total = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            const double step = std::arg(d[(i + 1) % M] / d[i]);
            total += step;
            worst = std::max(worst, std::abs(step));
        }
        if (worst < M_PI / 4.0) return static_cast<int>(std::lround(total / kTwoPi));
    }
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------- family

void DegeneratingFamily::validate() const {
    constexpr const char* where = "degeneration-lab/family";
    const auto& g = geometry.graph();
    schedule.validate();
    if (schedule.edge_count() != g.edge_count()) fail(ErrorKind::invalid_argument, where, "one schedule entry per edge required");
    if (!arg.empty() && arg.size() != g.edge_count()) fail(ErrorKind::invalid_argument, where, "one phase per edge required");
    if (marked.size() != g.legs().size()) fail(ErrorKind::invalid_argument, where, "one singular part per leg required");
    if (k_grid.empty()) fail(ErrorKind::invalid_argument, where, "empty k-grid");
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        if (!(k_grid[i] > k_grid[i - 1])) fail(ErrorKind::invalid_argument, where, "k-grid must be strictly increasing");
    std::vector<double> prev;
    for (double k : k_grid) {
        auto rho = schedule.at(k);
        for (std::size_t e = 0; e < rho.size(); ++e) {
            if (!(rho[e] > 0.0) || !std::isfinite(rho[e]))
                fail(ErrorKind::validation, where, "edge " + std::to_string(e) + ": need 0 < |s| < 1 at every grid point");
            if (!prev.empty() && !(rho[e] > prev[e]))
                fail(ErrorKind::validation, where, "edge " + std::to_string(e) + ": |s_e(k)| must decrease strictly along the grid");
        }
        prev = rho;
    }
}

PlumbedCurve DegeneratingFamily::curve_at(double k) const { return PlumbedCurve::from_log(geometry, schedule.at(k), arg); }

BlowupPoint DegeneratingFamily::blowup_point() const { return classify_sequence(schedule); }

double DegeneratingFamily::log_inverse_s(double k) const {
    auto rho = schedule.at(k);
    return rho.empty() ? 0.0 : *std::min_element(rho.begin(), rho.end());
}

std::size_t arithmetic_genus(const DualGraph& g) {
    std::size_t comps = 0;
    g.component_labels(&comps);
    return g.edge_count() + comps - g.vertex_count();
}

int zero_budget(const DualGraph& g, const std::vector<SingularPart>& marked) {
    int total = 2 * static_cast<int>(arithmetic_genus(g)) - 2;
    for (const auto& p : marked) total += static_cast<int>(p.order());
    return total;
}

std::vector<RNConstruction> solve_family(const DegeneratingFamily& fam, const RNOptions& opts) {
    fam.validate();
    std::vector<RNConstruction> out(fam.k_grid.size());
    parallel_for(fam.k_grid.size(), [&](std::size_t i) { out[i] = rn_construct(fam.curve_at(fam.k_grid[i]), fam.marked, opts); });
    return out;
}

// ---------------------------------------------------------------- limits

LimitReport limit_rn(const DegeneratingFamily& fam, const RNOptions& opts) { return limit_rn(fam, solve_family(fam, opts)); }

LimitReport limit_rn(const DegeneratingFamily& fam, const std::vector<RNConstruction>& grid) {
    fam.validate();
    if (grid.size() != fam.k_grid.size()) fail(ErrorKind::invalid_argument, "limit_rn", "one construction per grid point required");
    const auto& g = fam.geometry.graph();
    LimitReport rep;
    rep.point = fam.blowup_point();
    rep.c_limit = solve_multiscale(g, inflows_of(fam.marked), rep.point);
    rep.phi = build_phi(fam.geometry, rep.c_limit, fam.marked);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        LimitRow row;
        row.k = fam.k_grid[i];
        row.c = grid[i].c;
        for (std::size_t k = 0; k < g.edge_count(); ++k) {
            const cplx res = I * seam_integral(grid[i].psi, DualGraph::forward(k)) / kTwoPi;
            row.residues.push_back(res);
            row.deviation = std::max(row.deviation, std::abs(res - I * rep.c_limit.values[k]));
        }
        rep.rows.push_back(std::move(row));
    }
    rep.final_deviation = rep.rows.empty() ? 0.0 : rep.rows.back().deviation;
    rep.monotone_tail = true;
    for (std::size_t i = rep.rows.size() / 3 + 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].deviation > rep.rows[i - 1].deviation * (1.0 + 1e-9) + 1e-13) rep.monotone_tail = false;
    return rep;
}

SingularPart balancing_singular_part(const Jet& j, cplx s, const LocalChart& target) {
    SingularPart out{target, std::vector<cplx>(j.u.size())};
    cplx p = 1.0;
    for (std::size_t i = 0; i < j.u.size(); ++i) {
        out.u[i] = -p * j.u[i];
        p *= s;
    }
    return out;
}

// ---------------------------------------------------------------- stratification

double Stratification::separation_slope(std::size_t lambda) const {
    if (lambda == 0 || lambda >= strata.size()) fail(ErrorKind::invalid_argument, "separation_slope", "stratum out of range");
    return strata[lambda].mu_fit.slope - strata[lambda - 1].mu_fit.slope;
}

int order_at(const RationalDifferential& w, const LocalChart& chart, int lowest, int highest, double tol) {
    const double scale = w.coefficient_scale();
    if (!(scale > 0.0)) return highest + 1;
    auto coeffs = w.laurent(chart, lowest, highest);
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (std::abs(coeffs[i]) > tol * scale) return lowest + static_cast<int>(i);
    return highest + 1;
}

Stratification stratify(const DegeneratingFamily& fam, const DegenOptions& opts) {
    return stratify(fam, solve_family(fam, opts.rn), opts);
}

Stratification stratify(const DegeneratingFamily& fam, const std::vector<RNConstruction>& grid, const DegenOptions& opts) {
    constexpr const char* where = "degeneration-lab/stratify";
    fam.validate();
    const auto& geo = fam.geometry;
    const auto& g = geo.graph();
    const std::size_t V = g.vertex_count();
    const std::size_t nk = fam.k_grid.size();
    if (grid.size() != nk) fail(ErrorKind::invalid_argument, where, "one construction per grid point required");
    if (nk < 3) fail(ErrorKind::invalid_argument, where, "at least three grid points are needed to detect projective limits");

    Stratification st;
    st.geometry = geo;
    st.marked = fam.marked;
    st.m0 = zero_budget(g, fam.marked);
    st.m = opts.m ? opts.m : static_cast<std::size_t>(std::max(1, 2 * st.m0 + 1));
    st.level_of.assign(V, npos);
    const std::size_t m = st.m;

    std::vector<double> xs(nk);
    for (std::size_t i = 0; i < nk; ++i) xs[i] = fam.log_inverse_s(fam.k_grid[i]);

    // step 0: the limit RN differential
    auto lim = limit_rn(fam, grid);
    {
        StratumStep s0;
        const double scale = pieces_scale(lim.phi, [&] { std::vector<std::size_t> all(V); std::iota(all.begin(), all.end(), 0); return all; }());
        if (!(scale > 0.0)) fail(ErrorKind::validation, where, "the limit RN differential vanishes identically (no marked data)");
        s0.phi.assign(V, RationalDifferential{});
        for (std::size_t v = 0; v < V; ++v)
            if (lim.phi[v].coefficient_scale() > 1e-9 * scale) {
                s0.vertices.push_back(v);
                s0.phi[v] = cplx(1.0 / scale) * lim.phi[v];
                st.level_of[v] = 0;
            }
        s0.log_mu.assign(nk, 0.0);
        s0.mu_fit = fit_line(xs, s0.log_mu);
        st.strata.push_back(std::move(s0));
    }

    std::vector<std::size_t> assigned = st.strata[0].vertices;
    while (assigned.size() < V) {
        const std::size_t lambda = st.strata.size() - 1;
        StratumStep& cur = st.strata.back();
        std::vector<bool> inD(V, false);
        for (auto v : assigned) inD[v] = true;
        std::vector<std::size_t> rest;
        for (std::size_t v = 0; v < V; ++v)
            if (!inD[v]) rest.push_back(v);
        for (std::size_t e = 0; e < g.oriented_count(); ++e)
            if (inD[g.target(e)] && !inD[g.source(e)]) cur.boundary.push_back(e);
        std::vector<std::size_t> rest_legs;
        for (std::size_t l = 0; l < g.legs().size(); ++l)
            if (!inD[g.legs()[l].vertex]) rest_legs.push_back(l);

        const auto pieces = induced_components(g, assigned);

        // per k: Ψ_k^(≤λ), its jets at E^(λ), and the balancing collection 𝒮_k in log-magnitude form
        struct Sample {
            std::vector<double> logmag;
            std::vector<double> phase;
            std::vector<Jet> jets;
            double log_sup = kNegInf;
        };
        std::vector<Sample> samples(nk);
        std::optional<PieceSolution> last;
        parallel_for(nk, [&](std::size_t i) {
            const double k = fam.k_grid[i];
            const PlumbedCurve curve = fam.curve_at(k);
            PieceSolution psi = solve_pieces(curve, pieces, fam.marked, grid[i].c, opts.rn);
            Sample smp;
            for (auto l : rest_legs)
                for (auto u : fam.marked[l].u) {
                    smp.logmag.push_back(u == cplx{} ? kNegInf : std::log(std::abs(u)));
                    smp.phase.push_back(std::arg(u));
                }
            for (auto e : cur.boundary) {
                const std::size_t v = g.target(e);
                auto jet = contour_jet([&](cplx z) { return psi(v, z); }, geo.node_chart(e), m, opts.jet_radius, opts.jet_samples);
                const double ls = curve.log_abs_s(e);
                const double as = curve.arg[e >> 1U];
                for (std::size_t j = 0; j <= m; ++j) {
                    const cplx u = jet.u[j];
                    smp.logmag.push_back(u == cplx{} ? kNegInf : std::log(std::abs(u)) + static_cast<double>(j) * ls);
                    smp.phase.push_back(std::arg(u) + static_cast<double>(j) * as + M_PI);
                }
                smp.jets.push_back(std::move(jet));
            }
            for (double x : smp.logmag) smp.log_sup = std::max(smp.log_sup, x);
            samples[i] = std::move(smp);
            if (i + 1 == nk) last = std::move(psi);
        });
        for (std::size_t i = 0; i < nk; ++i)
            if (!std::isfinite(samples[i].log_sup))
                fail(ErrorKind::numerical, where, "balancing singular parts vanish at step " + std::to_string(lambda) + " (k = " +
                                                      std::to_string(fam.k_grid[i]) + ")");

        // scaled jets at k_max, and the consistency of μΨ with μΨ^(≤λ) on C^(λ)
        const double mu_last = std::exp(cur.log_mu.back());
        for (std::size_t b = 0; b < cur.boundary.size(); ++b) {
            Jet j = samples.back().jets[b];
            const double mu_e = std::exp(st.strata[st.level_of[g.target(cur.boundary[b])]].log_mu.back());
            for (auto& x : j.u) x *= mu_e;
            cur.jets.push_back(std::move(j));
        }
        {
            double diff = 0.0, ref = 0.0;
            for (auto v : cur.vertices)
                for (cplx z : probe_points(geo, v)) {
                    const cplx a = mu_last * grid.back().psi(v, z);
                    const cplx b = mu_last * (*last)(v, z);
                    diff = std::max(diff, std::abs(a - b));
                    ref = std::max(ref, std::abs(a));
                }
            cur.scaled_consistency = ref > 0.0 ? diff / ref : diff;
        }

        // projective limit of 𝒮 from the last three grid points
        const std::size_t dim = samples[0].logmag.size();
        std::vector<cplx> limit(dim);
        auto normalized = [&](std::size_t i, std::size_t c) {
            const double lm = samples[i].logmag[c];
            return lm == kNegInf ? cplx{} : std::polar(std::exp(lm - samples[i].log_sup), samples[i].phase[c]);
        };
        const std::size_t ia = nk - 3, ib = nk - 2, ic = nk - 1;
        bool stable = true;
        double defect = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const cplx ya = normalized(ia, c), yb = normalized(ib, c), yc = normalized(ic, c);
            const double d = std::max(std::abs(ya - yb), std::abs(yb - yc));
            if (std::max({std::abs(ya), std::abs(yb), std::abs(yc)}) <= 1e-13) continue;
            // |y| ∝ |s|^p means ln|y| falls by p per unit of −ln|s|
            if (std::abs(ya) > 0.0 && std::abs(yb) > 0.0 && std::abs(yc) > 0.0) {
                const double p1 = std::log(std::abs(yb) / std::abs(ya)) / (xs[ib] - xs[ia]);
                const double p2 = std::log(std::abs(yc) / std::abs(yb)) / (xs[ic] - xs[ib]);
                if (-p1 >= opts.decay_power && -p2 >= opts.decay_power) continue;
            }
            limit[c] = yc;
            if (d <= opts.stabilization) {
                defect = std::max(defect, d);
                continue;
            }
            defect = std::max(defect, d);
            stable = false;
        }
        {
            const double sup = max_abs(limit);
            if (!(sup > 0.0)) fail(ErrorKind::numerical, where, "projective limit of the balancing parts is zero");
            for (auto& x : limit) x /= sup;
        }
        cur.stabilized = stable;
        cur.stabilization_defect = defect;
        if (!stable) st.jet_convergent = false;

        // next scale
        StratumStep next;
        next.log_mu.resize(nk);
        for (std::size_t i = 0; i < nk; ++i) next.log_mu[i] = -samples[i].log_sup;
        next.mu_fit = fit_line(xs, next.log_mu);
        next.phi.assign(V, RationalDifferential{});

        // unpack the limit into singular parts on C^(>λ)
        std::map<std::size_t, std::vector<cplx>> leg_parts;
        std::map<std::size_t, std::vector<cplx>> node_parts;  // keyed by the outside preimage −e
        std::size_t pos = 0;
        for (auto l : rest_legs) {
            std::vector<cplx> u(limit.begin() + static_cast<long>(pos), limit.begin() + static_cast<long>(pos + fam.marked[l].u.size()));
            pos += fam.marked[l].u.size();
            leg_parts[l] = u;
        }
        for (auto e : cur.boundary) {
            node_parts[e ^ 1U] = std::vector<cplx>(limit.begin() + static_cast<long>(pos), limit.begin() + static_cast<long>(pos + m + 1));
            pos += m + 1;
        }

        // Φ^(λ+1): limit RN differential on each piece of C^(>λ)
        std::vector<RationalDifferential> phi_next(V);
        for (const auto& piece : induced_components(g, rest)) {
            auto sub = geo.restrict_to(piece);
            std::vector<SingularPart> parts;
            for (std::size_t l = 0; l < sub.leg_origin.size(); ++l) {
                const LocalChart chart = sub.geometry.marked_chart(l);
                if (sub.leg_origin[l] != npos)
                    parts.push_back({chart, leg_parts.at(sub.leg_origin[l])});
                else
                    parts.push_back({chart, node_parts.at(sub.leg_node_origin[l])});
            }
            // extrapolation can leave O(1e-16·defect) imbalance in the residues; re-centre it
            double sum = 0.0, big = 0.0;
            std::size_t carriers = 0;
            for (std::size_t l = 0; l < parts.size(); ++l) {
                sum += parts[l].residue().imag();
                big = std::max(big, std::abs(parts[l].residue()));
                if (sub.leg_origin[l] == npos && !parts[l].u.empty()) ++carriers;
            }
            if (std::abs(sum) > 1e-6 * std::max(1.0, big))
                fail(ErrorKind::numerical, where, "limit residues of the balancing parts do not balance on a piece of C^(>λ)");
            for (std::size_t l = 0; l < parts.size(); ++l)
                if (sub.leg_origin[l] == npos && !parts[l].u.empty() && carriers)
                    parts[l].u[0] -= I * (sum / static_cast<double>(carriers));
            CurrentAssignment c(sub.geometry.graph().edge_count());
            if (c.size() > 0) {
                auto point = classify_sequence(sub_schedule(fam.schedule, sub.edge_origin));
                c = solve_multiscale(sub.geometry.graph(), inflows_of(parts), point);
            }
            auto phi = build_phi(sub.geometry, c, parts);
            for (std::size_t i = 0; i < sub.vertex_origin.size(); ++i) phi_next[sub.vertex_origin[i]] = phi[i];
        }
        const double scale = pieces_scale(phi_next, rest);
        if (!(scale > 0.0)) fail(ErrorKind::numerical, where, "next stratum is empty");
        for (auto v : rest)
            if (phi_next[v].coefficient_scale() > 1e-9 * scale) {
                next.vertices.push_back(v);
                next.phi[v] = cplx(1.0 / scale) * phi_next[v];
                st.level_of[v] = lambda + 1;
                assigned.push_back(v);
            }
        st.strata.push_back(std::move(next));
    }

    // orders m_e at every boundary, from the twisted pieces
    for (auto& step : st.strata)
        for (auto e : step.boundary)
            step.boundary_orders.push_back(order_at(st.piece(g.target(e)), geo.node_chart(e), -static_cast<int>(m) - 2, 64,
                                                    opts.order_tolerance));
    return st;
}

TwistedLimitDifferential twisted_limit(const Stratification& st, double tol) {
    constexpr const char* where = "degeneration-lab/twisted_limit";
    const auto& geo = st.geometry;
    const auto& g = geo.graph();
    const std::size_t V = g.vertex_count();
    for (std::size_t v = 0; v < V; ++v)
        if (st.level_of.at(v) == npos) fail(ErrorKind::invalid_argument, where, "incomplete stratification");
    TwistedLimitDifferential out;
    out.expected_degree = st.m0;
    const int lowest = -static_cast<int>(st.m) - 2 - 64;
    for (std::size_t v = 0; v < V; ++v) {
        out.phi.push_back(st.piece(v));
        out.stratum.push_back(st.level_of[v]);
    }
    auto ord = [&](std::size_t v, const LocalChart& chart) { return order_at(out.phi[v], chart, lowest, 64, tol); };

    // zeros away from the special points
    for (std::size_t v = 0; v < V; ++v) {
        std::vector<SpecialPoint> special;
        for (auto e : g.incoming(v)) special.push_back(geo.node_chart(e).center);
        for (auto l : g.legs_at(v)) special.push_back(geo.marked_point(l));
        for (const auto& d : zeros_of(out.phi[v])) {
            bool at_special = false;
            for (const auto& p : special) {
                if (p.at_infinity != d.point.at_infinity) continue;
                if (p.at_infinity || std::abs(p.z - d.point.z) <= 1e-6 * (1.0 + std::abs(p.z))) at_special = true;
            }
            if (at_special) continue;
            out.zeros.push_back({v, d.point, d.multiplicity});
            out.degree += d.multiplicity;
        }
    }
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        const std::size_t e = DualGraph::forward(k), f = e + 1;
        NodeMultiplicity n;
        n.edge = k;
        n.ord_forward = ord(g.target(e), geo.node_chart(e));
        n.ord_backward = ord(g.target(f), geo.node_chart(f));
        n.multiplicity = n.ord_forward + n.ord_backward + 2;
        if (n.multiplicity < 0) out.nonnegative = false;
        // pole bound: the later stratum may not have a pole deeper than m_e + 2
        const std::size_t le = st.level_of[g.target(e)], lf = st.level_of[g.target(f)];
        if (le != lf) {
            const int early = le < lf ? n.ord_forward : n.ord_backward;
            const int late = le < lf ? n.ord_backward : n.ord_forward;
            if (late < -early - 2)
                fail(ErrorKind::numerical, where,
                     "pole bound violated at node " + std::to_string(k) + ": ord " + std::to_string(late) + " < " +
                         std::to_string(-early - 2));
        }
        out.degree += n.multiplicity;
        out.nodes.push_back(n);
    }
    for (std::size_t l = 0; l < g.legs().size(); ++l) {
        const int o = ord(g.legs()[l].vertex, geo.marked_chart(l));
        const int mult = static_cast<int>(st.marked.at(l).order()) + o;
        out.marked_multiplicity.push_back(mult);
        out.degree += mult;
    }
    return out;
}

// ---------------------------------------------------------------- zeros at finite s

ZeroTrack track_zeros(const GluedDifferential& w, const std::vector<SingularPart>& marked, const ZeroOptions& opts) {
    constexpr const char* where = "degeneration-lab/track_zeros";
    const PlumbedCurve& cv = w.curve();
    const auto& geo = cv.geometry;
    const auto& g = cv.graph();
    if (marked.size() != g.legs().size()) fail(ErrorKind::invalid_argument, where, "one singular part per leg required");
    ZeroTrack out;
    out.expected = zero_budget(g, marked);

    std::vector<int> winding(g.oriented_count());
    std::vector<double> radius(g.oriented_count());
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        const std::size_t e = DualGraph::forward(k);
        bool done = false;
        for (double R : opts.radii) {
            const double lR = std::log(R);
            if (!(lR > cv.log_rho(e))) continue;
            auto wf = contour_winding(w, e, lR, opts.samples, opts.contour_clearance);
            if (!wf) continue;
            auto wb = contour_winding(w, e + 1, lR, opts.samples, opts.contour_clearance);
            if (!wb) continue;
            winding[e] = *wf;
            winding[e + 1] = *wb;
            radius[e] = radius[e + 1] = R;
            out.annuli.push_back({k, R, *wf, *wb, *wf + *wb});
            done = true;
            break;
        }
        if (!done)
            fail(ErrorKind::numerical, where, "node " + std::to_string(k) + ": a zero lies on every trial contour");
    }

    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const auto& in = g.incoming(v);
        int count = -2 + static_cast<int>(in.size());
        for (auto e : in) count -= winding[e];
        for (auto l : g.legs_at(v)) count += static_cast<int>(marked[l].order());
        out.component_counts.push_back(count);

        // seeds: Φ^v minus the significant tail modes of ω^v
        const RationalDifferential& base = w.rational_part().at(v);
        const auto& sol = w.correction();
        double tail_scale = base.coefficient_scale();
        for (auto e : in) {
            const double x = cv.rho(e) / radius[e];
            double p = 1.0;
            for (std::size_t n = 1; n <= sol.psi.N; ++n) {
                p *= x;
                tail_scale = std::max(tail_scale, std::abs(sol.psi.at(e, -static_cast<int>(n))) * p);
            }
        }
        // roundoff residues would push a spurious zero towards infinity
        RationalDifferential seed;
        for (const auto& pole : base.poles())
            for (std::size_t k = 0; k < pole.a.size(); ++k)
                if (std::abs(pole.a[k]) >= opts.prune * tail_scale) seed.add_pole_term(pole.p, k + 1, pole.a[k]);
        for (std::size_t j = 0; j < base.polynomial().size(); ++j)
            if (std::abs(base.polynomial()[j]) >= opts.prune * tail_scale) seed.add_monomial(j, base.polynomial()[j]);
        for (auto e : in) {
            const double x = cv.rho(e) / radius[e];
            const double pr = cv.rho(e) * geo.chart_scale(e);
            double p = 1.0, pw = 1.0;
            for (std::size_t n = 1; n <= sol.psi.N; ++n) {
                p *= x;
                pw *= pr;
                const cplx b = sol.psi.at(e, -static_cast<int>(n));
                if (std::abs(b) * p < opts.prune * tail_scale || pw == 0.0) continue;
                seed.add_pole_term(geo.node_point(e), n + 1, -b * pw);
            }
        }
        // residual scale of Ψ^v in the chart at infinity, for rejecting spurious roots
        const auto weighted = [&](cplx z) { return std::abs(w(v, z)) * std::max(1.0, std::norm(z)); };
        double typical = 0.0;
        for (cplx z : probe_points(geo, v)) typical = std::max(typical, weighted(z));
        std::vector<ComponentZero> found;
        if (!seed.is_zero()) {
            for (const auto& d : zeros_of(seed)) {
                if (d.point.at_infinity) {
                    found.push_back({v, d.point, d.multiplicity});
                    continue;
                }
                cplx z = d.point.z;
                auto inside = [&](cplx p) {
                    for (auto e : in)
                        if (std::abs(p - geo.node_point(e)) < radius[e] * geo.chart_scale(e)) return true;
                    return false;
                };
                if (inside(z)) continue;
                for (int it = 0; it < 60; ++it) {
                    const cplx gv = w(v, z), dg = w.derivative(v, z);
                    if (gv == cplx{} || dg == cplx{}) break;
                    const cplx step = static_cast<double>(d.multiplicity) * gv / dg;
                    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
                    z -= step;
                    if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
                }
                if (inside(z) || !(weighted(z) <= 1e-8 * typical)) continue;
                // several seeds can converge to one zero
                bool seen = false;
                for (const auto& f : found)
                    if (!f.point.at_infinity && std::abs(f.point.z - z) < 1e-6 * (1.0 + std::abs(z))) seen = true;
                if (!seen) found.push_back({v, SpecialPoint::finite(z), d.multiplicity});
            }
        }
        // multiplicity from the winding of Ψ^v on a small circle around each located zero
        for (auto& f : found) {
            if (f.point.at_infinity) continue;
            const cplx z0 = f.point.z;
            double r = 1e-3 * (1.0 + std::abs(z0));
            for (const auto& o : found)
                if (&o != &f && !o.point.at_infinity) r = std::min(r, 0.4 * std::abs(o.point.z - z0));
            for (auto e : in) r = std::min(r, 0.4 * std::abs(geo.node_point(e) - z0));
            for (auto l : g.legs_at(v))
                if (!geo.marked_point(l).at_infinity) r = std::min(r, 0.4 * std::abs(geo.marked_point(l).z - z0));
            if (!(r > 0.0)) continue;
            constexpr int samples = 256;
            double turn = 0.0;
            cplx prev = w(v, z0 + r);
            for (int j = 1; j <= samples; ++j) {
                const cplx cur = w(v, z0 + std::polar(r, 2.0 * M_PI * j / samples));
                turn += std::arg(cur / prev);
                prev = cur;
            }
            const int wind = static_cast<int>(std::lround(turn / (2.0 * M_PI)));
            if (wind > 0) f.multiplicity = wind;
        }
        int located = 0;
        for (const auto& f : found) located += f.multiplicity;
        if (located != count) out.consistent = false;
        for (auto& f : found) out.zeros.push_back(f);
    }
    out.total = 0;
    for (int c : out.component_counts) out.total += c;
    for (const auto& a : out.annuli) out.total += a.count;
    return out;
}

// ---------------------------------------------------------------- m-balanced approximation

BalancedApproximation balanced_approximation(const PlumbedCurve& curve, const std::vector<SingularPart>& marked,
                                             const BalancedOptions& opts) {
    auto rn = rn_construct(curve, marked, opts.rn);
    return balanced_approximation(curve, marked, rn.c, opts);
}

BalancedApproximation balanced_approximation(const PlumbedCurve& curve, const std::vector<SingularPart>& marked,
                                             const CurrentAssignment& c, const BalancedOptions& opts) {
    constexpr const char* where = "degeneration-lab/balanced_approximation";
    const auto& geo = curve.geometry;
    const auto& g = geo.graph();
    const std::size_t m = opts.m;
    const std::size_t E2 = g.oriented_count();
    const auto dim = static_cast<Eigen::Index>(E2 * m);

    BalancedApproximation out;
    out.m = m;
    out.c = c;
    const auto phi0 = build_phi(geo, c, marked);

    // x[e·m + j] is the coefficient of z_e^{−j−2} dz_e at q_e
    auto balance = [&](const std::vector<RationalDifferential>& w) {
        Eigen::VectorXcd x = Eigen::VectorXcd::Zero(dim);
        if (m == 0) return x;
        for (std::size_t e = 0; e < E2; ++e) {
            auto u = w[g.target(e)].laurent(geo.node_chart(e), 0, static_cast<int>(m) - 1);
            const cplx s = curve.s(e);
            cplx p = s;
            for (std::size_t j = 0; j < m; ++j) {
                x[static_cast<Eigen::Index>((e ^ 1U) * m + j)] = -p * u[j];
                p *= s;
            }
        }
        return x;
    };
    auto realize = [&](const Eigen::VectorXcd& x) {
        std::vector<RationalDifferential> out_w(g.vertex_count());
        for (std::size_t v = 0; v < g.vertex_count(); ++v) {
            std::vector<SingularPart> parts;
            for (auto e : g.incoming(v)) {
                SingularPart p{geo.node_chart(e), std::vector<cplx>(m + 1)};
                for (std::size_t j = 0; j < m; ++j) p.u[j + 1] = x[static_cast<Eigen::Index>(e * m + j)];
                parts.push_back(std::move(p));
            }
            if (!parts.empty() && m > 0) out_w[v] = rn_genus0(parts);
        }
        return out_w;
    };
    auto inf_norm = [](const Eigen::VectorXcd& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; };

    double n0 = c.max_abs();
    for (const auto& p : marked) n0 = std::max(n0, max_abs(p.u));
    out.levels.push_back(phi0);
    out.level_norms.push_back(n0);

    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(dim);
    Eigen::VectorXcd x = balance(phi0);
    const Eigen::VectorXcd rhs = x;
    const double first = inf_norm(x);
    const double abs_s = curve.max_abs_s();
    for (std::size_t l = 1; first > 0.0; ++l) {
        const double n = inf_norm(x);
        sum += x;
        out.levels.push_back(realize(x));
        out.level_norms.push_back(n);
        if (n <= opts.tolerance * first) break;
        const std::size_t L = out.level_norms.size() - 1;
        if (L >= 4 && std::sqrt(out.level_norms[L] / out.level_norms[L - 2]) >= 1.0)
            fail(ErrorKind::numerical, where, "balancing series diverges (M_m|s| >= 1)");
        if (l >= opts.max_levels) fail(ErrorKind::numerical, where, "balancing series did not converge");
        x = balance(out.levels.back());
    }
    for (std::size_t l = 0; l + 1 < out.level_norms.size(); ++l)
        if (out.level_norms[l] > 0.0 && abs_s > 0.0)
            out.fitted_m = std::max(out.fitted_m, out.level_norms[l + 1] / (abs_s * out.level_norms[l]));

    auto tail = realize(sum);
    out.phi = phi0;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) out.phi[v].add(tail[v]);

    // fixed point: the singular parts at every q_e equal the balanced jets from q_{−e}
    const Eigen::VectorXcd target = balance(out.phi);
    for (std::size_t e = 0; e < E2 && m > 0; ++e) {
        auto sp = out.phi[g.target(e)].laurent(geo.node_chart(e), -static_cast<int>(m) - 1, -2);
        for (std::size_t j = 0; j < m; ++j) {
            const cplx have = sp[m - 1 - j];  // power −(j+2)
            out.balancing_residual =
                std::max(out.balancing_residual, std::abs(have - target[static_cast<Eigen::Index>(e * m + j)]));
        }
    }

    if (opts.direct_check && dim > 0) {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(dim);
            unit[i] = 1.0;
            A.col(i) -= balance(realize(unit));
        }
        const Eigen::VectorXcd direct = A.partialPivLu().solve(rhs);
        out.direct_difference = inf_norm(direct - sum);
    }
    return out;
}

std::vector<cplx> probe_points(const CurveGeometry& g, std::size_t v, std::size_t per_circle) {
    std::vector<std::pair<cplx, double>> centres;
    for (auto e : g.graph().incoming(v)) centres.emplace_back(g.node_point(e), g.chart_scale(e));
    for (auto l : g.graph().legs_at(v))
        if (!g.marked_point(l).at_infinity) centres.emplace_back(g.marked_point(l).z, g.marked_chart(l).scale);
    if (centres.empty()) centres.emplace_back(0.0, 1.0 / 0.6);
    std::vector<cplx> out;
    for (auto [c, r] : centres)
        for (std::size_t i = 0; i < per_circle; ++i)
            out.push_back(c + std::polar(0.6 * r, kTwoPi * (static_cast<double>(i) + 0.3) / static_cast<double>(per_circle)));
    return out;
}

double approximation_error(const GluedDifferential& psi, const BalancedApproximation& a) {
    const auto& geo = psi.curve().geometry;
    double worst = 0.0;
    for (std::size_t v = 0; v < geo.graph().vertex_count(); ++v)
        for (cplx z : probe_points(geo, v)) worst = std::max(worst, std::abs(psi(v, z) - a.phi.at(v)(z)));
    return worst;
}

double seam_approximation_error(const GluedDifferential& psi, const BalancedApproximation& a, std::size_t samples) {
    const PlumbedCurve& cv = psi.curve();
    const auto& geo = cv.geometry;
    double worst = 0.0;
    for (std::size_t e = 0; e < cv.graph().oriented_count(); ++e) {
        const double lr = cv.log_rho(e);
        const double r = geo.chart_scale(e);
        if (std::log(r) + lr < -600.0) continue;
        const cplx q = geo.node_point(e);
        const auto& phi = a.phi.at(cv.graph().target(e));
        for (std::size_t i = 0; i < samples; ++i) {
            const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(samples);
            const cplx ze = std::exp(cplx(lr, th));
            const cplx approx = phi(q + r * ze) * r * ze;
            worst = std::max(worst, std::abs(psi.chart_density(e, lr, th) - approx));
        }
    }
    return worst;
}

}  // namespace rn
