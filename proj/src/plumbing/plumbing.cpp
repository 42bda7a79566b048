#include "plumbing/plumbing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "util/error.hpp"

namespace rn {

namespace {

const cplx I(0.0, 1.0);

template <class F>
cplx integrate(F f, double a, double b, double tol) {
    if (a == b) return {};
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol);
}

double dist_to_segment(cplx p, cplx a, cplx b) {
    const cplx d = b - a;
    const double len2 = std::norm(d);
    double t = len2 > 0.0 ? std::real((p - a) * std::conj(d)) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * d));
}

struct Obstacle {
    cplx center;
    double radius;
};

std::vector<Obstacle> obstacles_on(const PlumbedCurve& c, std::size_t v, double clearance) {
    const CurveGeometry& g = c.geometry;
    std::vector<Obstacle> out;
    for (std::size_t e : c.graph().incoming(v)) out.push_back({g.node_point(e), clearance * g.chart_scale(e)});
    for (std::size_t l : c.graph().legs_at(v)) {
        const auto& p = g.marked_point(l);
        if (!p.at_infinity) out.push_back({p.z, clearance * g.marked_chart(l).scale});
    }
    return out;
}

bool clear(cplx a, cplx b, const std::vector<Obstacle>& obs) {
    for (const auto& o : obs)
        if (dist_to_segment(o.center, a, b) < o.radius) return false;
    return true;
}

bool route(cplx a, cplx b, const std::vector<Obstacle>& obs, int depth, std::vector<cplx>& out) {
    if (clear(a, b, obs)) {
        out.push_back(b);
        return true;
    }
    if (depth == 0) return false;
    const Obstacle* worst = nullptr;
    double best = 0.0;
    for (const auto& o : obs) {
        const double gap = o.radius - dist_to_segment(o.center, a, b);
        if (gap > best) {
            best = gap;
            worst = &o;
        }
    }
    const cplx d = b - a;
    cplx n = I * d / std::abs(d);
    // leave the obstacle on the other side of the path
    if (std::real((worst->center - a) * std::conj(n)) > 0.0) n = -n;
    for (double factor : {2.0, 3.0, 5.0, 8.0}) {
        const cplx w = worst->center + factor * worst->radius * n;
        bool inside = false;
        for (const auto& o : obs) inside = inside || std::abs(w - o.center) < o.radius;
        if (inside) continue;
        std::vector<cplx> trial;
        if (route(a, w, obs, depth - 1, trial) && route(w, b, obs, depth - 1, trial)) {
            out.insert(out.end(), trial.begin(), trial.end());
            return true;
        }
    }
    return false;
}

std::vector<double> flow_of(const std::vector<SingularPart>& marked) { return inflows_of(marked); }

}  // namespace

GluedDifferential::GluedDifferential(std::vector<RationalDifferential> phi, CurrentAssignment c, ARNSolution omega)
    : phi_(std::move(phi)), c_(std::move(c)), omega_(std::move(omega)) {
    const PlumbedCurve& cv = curve();
    const DualGraph& g = cv.graph();
    regular_.resize(g.oriented_count());
    node_poles_.resize(g.oriented_count());
    for (std::size_t e = 0; e < g.oriented_count(); ++e) {
        const cplx q = cv.geometry.node_point(e);
        const auto& src = phi_[g.target(e)];
        RationalDifferential reg;
        for (const auto& p : src.poles()) {
            if (p.p == q) {
                node_poles_[e] = p.a;
                continue;
            }
            for (std::size_t k = 0; k < p.a.size(); ++k)
                if (p.a[k] != cplx{}) reg.add_pole_term(p.p, k + 1, p.a[k]);
        }
        for (std::size_t j = 0; j < src.polynomial().size(); ++j)
            if (src.polynomial()[j] != cplx{}) reg.add_monomial(j, src.polynomial()[j]);
        regular_[e] = std::move(reg);
    }
}

cplx GluedDifferential::operator()(std::size_t v, cplx z) const { return phi_.at(v)(z) - omega_(v, z); }

cplx GluedDifferential::derivative(std::size_t v, cplx z) const { return phi_.at(v).derivative(z) - omega_.derivative(v, z); }

cplx GluedDifferential::chart_density(std::size_t e, double log_radius, double angle) const {
    const PlumbedCurve& cv = curve();
    const std::size_t v = cv.graph().target(e);
    const double r = cv.geometry.chart_scale(e);
    const cplx q = cv.geometry.node_point(e);
    const cplx lz = cplx(std::log(r) + log_radius, angle);  // ln(z − q)
    const cplx dz = std::exp(lz);
    cplx acc{};
    const auto& a = node_poles_[e];
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] != cplx{}) acc += k == 0 ? a[0] : a[k] * std::exp(-static_cast<double>(k) * lz);
    if (dz != cplx{}) acc += (regular_[e](q + dz) - omega_.value_without(v, q + dz, e)) * dz;
    acc -= omega_.tail_density(e, std::exp(cplx(log_radius - cv.log_rho(e), angle)));
    return acc;
}

double GluedDifferential::gluing_residual(std::size_t samples) const {
    const PlumbedCurve& cv = curve();
    double worst = 0.0;
    for (std::size_t e = 0; e < cv.graph().oriented_count(); ++e) {
        const double lr = cv.log_rho(e);
        const double ph = cv.arg[e >> 1U];
        for (std::size_t i = 0; i < samples; ++i) {
            const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(samples);
            worst = std::max(worst, std::abs(chart_density(e, lr, th) + chart_density(e ^ 1U, lr, ph - th)));
        }
    }
    return worst;
}

double GluedDifferential::phi_seam_scale(std::size_t samples) const {
    const PlumbedCurve& cv = curve();
    double m = 0.0;
    for (std::size_t e = 0; e < cv.graph().oriented_count(); ++e) {
        const double lr = cv.log_rho(e);
        const double r = cv.geometry.chart_scale(e);
        const cplx q = cv.geometry.node_point(e);
        for (std::size_t i = 0; i < samples; ++i) {
            const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(samples);
            const cplx lz = cplx(std::log(r) + lr, th);
            const cplx dz = std::exp(lz);
            cplx acc{};
            const auto& a = node_poles_[e];
            for (std::size_t k = 0; k < a.size(); ++k)
                if (a[k] != cplx{}) acc += k == 0 ? a[0] : a[k] * std::exp(-static_cast<double>(k) * lz);
            if (dz != cplx{}) acc += regular_[e](q + dz) * dz;
            m = std::max(m, std::abs(acc));
        }
    }
    return m;
}

GluedDifferential build_psi_c(std::shared_ptr<const JumpOperator> op, const CurrentAssignment& c,
                              const std::vector<SingularPart>& marked, const PsiOptions& opts) {
    const PlumbedCurve& curve = op->curve();
    auto phi = build_phi(curve.geometry, c, marked);
    auto data = jump_data(curve, phi, op->modes());
    ArnOptions arn = opts.arn;
    arn.modes = op->modes();
    auto omega = solve_arn(op, data, arn);
    return GluedDifferential(std::move(phi), c, std::move(omega));
}

GluedDifferential build_psi_c(const PlumbedCurve& curve, const CurrentAssignment& c, const std::vector<SingularPart>& marked,
                              const PsiOptions& opts) {
    return build_psi_c(std::make_shared<const JumpOperator>(curve, opts.arn.modes), c, marked, opts);
}

GluedDifferential build_omega_holo(std::shared_ptr<const JumpOperator> op, const CurrentAssignment& c, const PsiOptions& opts) {
    const PlumbedCurve& curve = op->curve();
    const DualGraph& g = curve.graph();
    std::vector<double> zero(g.legs().size(), 0.0);
    auto res = kirchhoff_residuals(g, zero, ElectromotiveForce{}, Resistances(g.edge_count(), 1.0), c);
    if (res.conservation > 1e-10 * std::max(1.0, c.max_abs()))
        fail(ErrorKind::validation, "build_omega_holo", "currents must be conserved with zero inflow");
    std::vector<std::vector<cplx>> none(g.legs().size());
    return build_psi_c(std::move(op), c, bind_marked_parts(curve.geometry, none), opts);
}

cplx seam_integral(const GluedDifferential& w, std::size_t e, std::size_t samples) {
    const double lr = w.curve().log_rho(e);
    cplx sum{};
    for (std::size_t i = 0; i < samples; ++i)
        sum += w.chart_density(e, lr, 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(samples));
    // clockwise in z_e: ∫ D d ln z_e = −i ∫_0^{2π} D dθ
    return -I * sum * (2.0 * M_PI / static_cast<double>(samples));
}

PeriodReport period_im(const GluedDifferential& w, const OrientedCycle& gamma, const PeriodOptions& opts) {
    return period_im(w, CycleRealization{gamma, {}}, opts);
}

PeriodReport period_im(const GluedDifferential& w, const CycleRealization& gamma, const PeriodOptions& opts) {
    const PlumbedCurve& cv = w.curve();
    const DualGraph& g = cv.graph();
    const CurveGeometry& geo = cv.geometry;
    const auto& edges = gamma.cycle.edges;
    if (edges.empty()) fail(ErrorKind::invalid_argument, "period_im", "empty cycle");
    if (!gamma.cycle.closes(g)) fail(ErrorKind::invalid_argument, "period_im", "edge sequence is not a closed cycle");
    if (!gamma.waypoints.empty() && gamma.waypoints.size() != edges.size())
        fail(ErrorKind::invalid_argument, "period_im", "one waypoint list per step required");

    PeriodReport rep;
    rep.cycle = gamma.cycle;
    const double tol = opts.tolerance;
    cplx total{};
    for (std::size_t j = 0; j < edges.size(); ++j) {
        const std::size_t a = edges[j];
        const std::size_t b = edges[(j + 1) % edges.size()] ^ 1U;
        const std::size_t v = g.target(a);
        const double lra = cv.log_rho(a);
        const double lrb = cv.log_rho(b);
        rep.log_term += w.currents().at(a) * cv.log_modulus[a >> 1U];

        // arc δ on γ_a from the glued arrival point (angle arg s) to angle 0
        const double phase = cv.arg[a >> 1U];
        cplx arc = integrate([&](double th) { return w.chart_density(a, lra, th) * I; }, phase, 0.0, tol);
        rep.path.push_back({PathPiece::Kind::arc, v, a, std::polar(1.0, phase), 1.0, arc.imag()});

        cplx out = integrate([&](double t) { return w.chart_density(a, t, 0.0); }, lra, 0.0, tol);
        rep.path.push_back({PathPiece::Kind::radial_out, v, a, std::exp(lra), 1.0, out.imag()});

        const cplx start = geo.node_point(a) + geo.chart_scale(a);
        const cplx end = geo.node_point(b) + geo.chart_scale(b);
        auto obs = obstacles_on(cv, v, opts.clearance);
        std::vector<cplx> stops;
        if (!gamma.waypoints.empty()) stops = gamma.waypoints[j];
        stops.push_back(end);
        cplx cur = start;
        std::vector<cplx> poly;
        for (cplx s : stops) {
            if (!route(cur, s, obs, 8, poly))
                fail(ErrorKind::numerical, "period_im", "cannot route a path on component " + std::to_string(v));
            cur = s;
        }
        cur = start;
        for (cplx p : poly) {
            const cplx d = p - cur;
            cplx seg = integrate([&](double t) { return w(v, cur + t * d) * d; }, 0.0, 1.0, tol);
            rep.path.push_back({PathPiece::Kind::segment, v, npos, cur, p, seg.imag()});
            total += seg;
            cur = p;
        }

        cplx in = integrate([&](double t) { return w.chart_density(b, t, 0.0); }, 0.0, lrb, tol);
        rep.path.push_back({PathPiece::Kind::radial_in, v, b, 1.0, std::exp(lrb), in.imag()});
        total += arc + out + in;
    }
    rep.integral = total;
    rep.value = total.imag();
    rep.finite_part = rep.value - rep.log_term;
    return rep;
}

double closed_path_im(const GluedDifferential& w, std::size_t v, const std::vector<cplx>& polygon, const PeriodOptions& opts) {
    cplx total{};
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const cplx a = polygon[i];
        const cplx d = polygon[(i + 1) % polygon.size()] - a;
        total += integrate([&](double t) { return w(v, a + t * d) * d; }, 0.0, 1.0, opts.tolerance);
    }
    return total.imag();
}

Resistances plumbing_resistances(const PlumbedCurve& curve) { return curve.log_modulus; }

double RNConstruction::max_period() const {
    double m = 0.0;
    for (const auto& p : periods) m = std::max(m, std::abs(p.value));
    return m;
}

RNConstruction rn_construct(const PlumbedCurve& curve, const std::vector<SingularPart>& marked, const RNOptions& opts) {
    const DualGraph& g = curve.graph();
    double scale = 0.0;
    for (const auto& m : marked) {
        const cplx r = m.residue();
        scale = std::max(scale, std::abs(r));
        if (std::abs(r.real()) > 1e-12 * std::max(1.0, std::abs(r)))
            fail(ErrorKind::validation, "rn_construct", "residues at marked points must be purely imaginary");
    }
    const LegFlow f = flow_of(marked);
    double sum = 0.0;
    for (double x : f) sum += x;
    if (std::abs(sum) > 1e-12 * std::max(1.0, scale)) fail(ErrorKind::validation, "rn_construct", "residues must sum to zero");

    const Resistances rho = plumbing_resistances(curve);
    auto op = std::make_shared<const JumpOperator>(curve, opts.psi.arn.modes);
    const CycleBasis basis = cycle_basis(g);

    RNConstruction out;
    out.c0 = solve_flow(g, f, rho);
    out.level_norms.push_back(out.c0.max_abs());
    CurrentAssignment c = out.c0;
    const double floor = opts.level_tolerance * std::max(1.0, out.c0.max_abs());

    auto periods_of = [&](const GluedDifferential& psi) {
        std::vector<PeriodReport> reps;
        for (const auto& cyc : basis.cycles) reps.push_back(period_im(psi, cyc, opts.periods));
        return reps;
    };

    GluedDifferential psi = build_psi_c(op, c, marked, opts.psi);
    std::vector<PeriodReport> reps = periods_of(psi);
    for (std::size_t level = 1; !basis.cycles.empty(); ++level) {
        if (level > opts.max_levels)
            fail(ErrorKind::numerical, "rn_construct", "correction series did not converge in " + std::to_string(opts.max_levels) + " levels");
        ElectromotiveForce emf;
        for (const auto& r : reps) emf.values.push_back(-r.value);
        out.emf.push_back(emf.values);
        CurrentAssignment delta = solve_force(g, emf, rho);
        const double norm = delta.max_abs();
        const double prev = out.level_norms.back();
        out.levels.push_back(delta);
        out.level_norms.push_back(norm);
        c = c + delta;
        psi = build_psi_c(op, c, marked, opts.psi);
        reps = periods_of(psi);
        if (norm <= floor) break;
        if (level >= 2 && norm >= 0.5 * prev) {
            if (norm < 1e-9 * std::max(1.0, out.c0.max_abs())) {
                out.stagnated = true;
                break;
            }
            if (level >= 3 && norm > prev)
                fail(ErrorKind::numerical, "rn_construct", "correction series diverges; |s| too large");
        }
    }
    out.c = c;
    out.psi = psi;
    out.periods = reps;

    out.c_direct = c;
    if (opts.direct_check && !basis.cycles.empty()) {
        const std::size_t n = basis.cycles.size();
        GluedDifferential psi0 = build_psi_c(op, out.c0, marked, opts.psi);
        Eigen::VectorXd p0(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) p0(static_cast<Eigen::Index>(i)) = period_im(psi0, basis.cycles[i], opts.periods).value;
        Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        std::vector<CurrentAssignment> chi;
        for (std::size_t i = 0; i < n; ++i) {
            CurrentAssignment x(g.edge_count());
            for (std::size_t k = 0; k < g.edge_count(); ++k) x.values[k] = basis.cycles[i].coefficients[k];
            auto om = build_omega_holo(op, x, opts.psi);
            for (std::size_t j = 0; j < n; ++j)
                A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = period_im(om, basis.cycles[j], opts.periods).value;
            chi.push_back(x);
        }
        Eigen::VectorXd x = A.partialPivLu().solve(-p0);
        out.c_direct = out.c0;
        for (std::size_t i = 0; i < n; ++i) out.c_direct = out.c_direct + x(static_cast<Eigen::Index>(i)) * chi[i];
        out.direct_difference = (out.c - out.c_direct).max_abs();
    }
    return out;
}

}  // namespace rn
