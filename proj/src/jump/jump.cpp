#include "jump/jump.hpp"

#include <algorithm>
#include <cmath>

#include "util/error.hpp"

namespace rn {

namespace {

cplx unit(double phase) { return std::polar(1.0, phase); }

double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

PlumbedCurve PlumbedCurve::from_s(CurveGeometry g, const std::vector<cplx>& s) {
    if (s.size() != g.graph().edge_count()) fail(ErrorKind::invalid_argument, "plumbed_curve", "one s_e per edge required");
    std::vector<double> L(s.size());
    std::vector<double> a(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double m = std::abs(s[k]);
        if (!(m > 0.0) || !(m < 1.0) || !std::isfinite(m))
            fail(ErrorKind::validation, "plumbed_curve", "edge " + std::to_string(k) + ": need 0 < |s| < 1");
        L[k] = -std::log(m);
        a[k] = std::arg(s[k]);
    }
    return from_log(std::move(g), std::move(L), std::move(a));
}

PlumbedCurve PlumbedCurve::from_log(CurveGeometry g, std::vector<double> log_modulus, std::vector<double> arg) {
    const std::size_t n = g.graph().edge_count();
    if (arg.empty()) arg.assign(n, 0.0);
    if (log_modulus.size() != n || arg.size() != n)
        fail(ErrorKind::invalid_argument, "plumbed_curve", "one plumbing parameter per edge required");
    for (std::size_t k = 0; k < n; ++k)
        if (!(log_modulus[k] > 0.0) || !std::isfinite(log_modulus[k]) || !std::isfinite(arg[k]))
            fail(ErrorKind::validation, "plumbed_curve", "edge " + std::to_string(k) + ": need 0 < |s| < 1");
    return PlumbedCurve{std::move(g), std::move(log_modulus), std::move(arg)};
}

double PlumbedCurve::rho(std::size_t e) const { return std::exp(-0.5 * log_modulus.at(e >> 1U)); }
cplx PlumbedCurve::sigma(std::size_t e) const { return unit(arg.at(e >> 1U)); }
cplx PlumbedCurve::s(std::size_t e) const { return std::exp(-log_modulus.at(e >> 1U)) * sigma(e); }

double PlumbedCurve::max_abs_s() const {
    double m = 0.0;
    for (double L : log_modulus) m = std::max(m, std::exp(-L));
    return m;
}

cplx SeamFunction::value(std::size_t e, double theta) const {
    cplx acc{};
    const int n = static_cast<int>(N);
    for (int k = -n; k <= n; ++k) {
        const cplx a = at(e, k);
        if (a != cplx{}) acc += a * unit(k * theta);
    }
    return acc;
}

double SeamFunction::sup_norm(std::size_t samples) const {
    if (samples == 0) samples = std::max<std::size_t>(64, 4 * N + 4);
    double m = 0.0;
    for (std::size_t e = 0; e < modes.size(); ++e) {
        if (max_abs(modes[e]) == 0.0) continue;
        for (std::size_t i = 0; i < samples; ++i)
            m = std::max(m, std::abs(value(e, 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(samples))));
    }
    return m;
}

double SeamFunction::max_compatibility_defect(const PlumbedCurve& c) const {
    double m = 0.0;
    const int n = static_cast<int>(N);
    for (std::size_t e = 0; e < modes.size(); ++e) {
        const cplx sg = c.sigma(e);
        for (int k = 1; k <= n; ++k) m = std::max(m, std::abs(at(e, -k) - std::pow(sg, k) * at(e ^ 1U, k)));
        m = std::max(m, std::abs(at(e, 0) + at(e ^ 1U, 0)));
    }
    return m;
}

std::vector<cplx> seam_restrict(const PlumbedCurve& c, const RationalDifferential& f, std::size_t e, std::size_t N) {
    const CurveGeometry& g = c.geometry;
    const cplx q = g.node_point(e);
    for (const auto& p : f.poles()) {
        if (p.p == q) continue;
        const double t = std::abs(g.to_chart(e, p.p));
        if (t <= 1.0)
            fail(ErrorKind::validation, "seam_restrict",
                 "pole at " + describe(SpecialPoint::finite(p.p)) + " inside the chart disk of edge " + std::to_string(e));
    }
    const int n = static_cast<int>(N);
    const auto lc = f.laurent(g.node_chart(e), -n - 1, n - 1);
    std::vector<cplx> out(2 * N + 1);
    for (int j = -n - 1; j <= n - 1; ++j) {
        const cplx cj = lc[static_cast<std::size_t>(j + n + 1)];
        if (cj == cplx{}) continue;
        const int mode = j + 1;
        const cplx v = mode == 0 ? cj : cj * std::exp(mode * c.log_rho(e));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            fail(ErrorKind::numerical, "seam_restrict", "mode " + std::to_string(mode) + " overflows on edge " + std::to_string(e));
        out[static_cast<std::size_t>(mode + n)] = v;
    }
    return out;
}

std::vector<cplx> pull_back(const PlumbedCurve& c, std::size_t e, const std::vector<cplx>& in) {
    const int n = static_cast<int>((in.size() - 1) / 2);
    const cplx sg = c.sigma(e);
    std::vector<cplx> out(in.size());
    for (int k = -n; k <= n; ++k)
        out[static_cast<std::size_t>(-k + n)] = -std::pow(sg, k) * in[static_cast<std::size_t>(k + n)];
    return out;
}

SeamFunction jump_data(const PlumbedCurve& c, const std::vector<RationalDifferential>& per_component, std::size_t N) {
    const DualGraph& gr = c.graph();
    if (per_component.size() != gr.vertex_count())
        fail(ErrorKind::invalid_argument, "jump_data", "one differential per component required");
    std::vector<std::vector<cplx>> restricted(gr.oriented_count());
    for (std::size_t e = 0; e < gr.oriented_count(); ++e) restricted[e] = seam_restrict(c, per_component[gr.target(e)], e, N);
    SeamFunction phi(gr.oriented_count(), N);
    for (std::size_t e = 0; e < gr.oriented_count(); ++e) {
        const auto back = pull_back(c, e, restricted[e ^ 1U]);
        for (std::size_t i = 0; i < back.size(); ++i) phi.modes[e][i] = restricted[e][i] - back[i];
    }
    return phi;
}

JumpOperator::JumpOperator(PlumbedCurve curve, std::size_t modes) : curve_(std::move(curve)), N_(modes) {
    if (N_ == 0) fail(ErrorKind::invalid_argument, "jump_operator", "mode count must be positive");
    const DualGraph& gr = curve_.graph();
    const std::size_t E = gr.oriented_count();
    const auto dim = static_cast<Eigen::Index>(E * (2 * N_ + 1));
    K_ = Eigen::MatrixXcd::Zero(dim, dim);
    coupling_.assign(E, std::vector<Eigen::MatrixXcd>(E));
    const int n = static_cast<int>(N_);
    for (std::size_t e = 0; e < E; ++e) {
        const std::size_t v = gr.target(e);
        const double pr = curve_.rho(e) * curve_.geometry.chart_scale(e);
        const cplx sg = curve_.sigma(e);
        for (std::size_t e2 : gr.incoming(v)) {
            if (e2 == e) continue;
            const cplx d = curve_.geometry.node_point(e) - curve_.geometry.node_point(e2);
            const cplx A = curve_.rho(e2) * curve_.geometry.chart_scale(e2) / d;
            const cplx B = pr / d;
            Eigen::MatrixXcd C(n, n);
            cplx Ak = 1.0;
            for (int k = 1; k <= n; ++k) {
                Ak *= A;
                cplx entry = Ak * B;  // j = 0
                for (int j = 0; j < n; ++j) {
                    if (j > 0) entry *= -B * static_cast<double>(k + j) / static_cast<double>(j);
                    C(k - 1, j) = entry;
                }
            }
            for (int k = 1; k <= n; ++k) {
                const auto col = static_cast<Eigen::Index>(index(e2, -k));
                cplx sp = 1.0;
                for (int j = 0; j < n; ++j) {
                    sp *= sg;
                    const cplx x = C(k - 1, j);
                    if (x == cplx{}) continue;
                    K_(static_cast<Eigen::Index>(index(e, j + 1)), col) += x;
                    K_(static_cast<Eigen::Index>(index(e ^ 1U, -(j + 1))), col) += sp * x;
                }
            }
            coupling_[e][e2] = std::move(C);
        }
    }
}

std::size_t JumpOperator::index(std::size_t e, int n) const {
    return e * (2 * N_ + 1) + static_cast<std::size_t>(n + static_cast<int>(N_));
}

Eigen::VectorXcd JumpOperator::pack(const SeamFunction& f) const {
    if (f.N != N_ || f.modes.size() != curve_.graph().oriented_count())
        fail(ErrorKind::invalid_argument, "jump_operator", "seam function shape does not match the operator");
    Eigen::VectorXcd x(K_.rows());
    std::size_t i = 0;
    for (const auto& m : f.modes)
        for (const auto& a : m) x(static_cast<Eigen::Index>(i++)) = a;
    return x;
}

SeamFunction JumpOperator::unpack(const Eigen::VectorXcd& x) const {
    SeamFunction f(curve_.graph().oriented_count(), N_);
    std::size_t i = 0;
    for (auto& m : f.modes)
        for (auto& a : m) a = x(static_cast<Eigen::Index>(i++));
    return f;
}

Eigen::VectorXcd JumpOperator::solve_direct(const Eigen::VectorXcd& rhs) const {
    if (!lu_) {
        Eigen::MatrixXcd M = K_;
        M.diagonal().array() += 1.0;
        lu_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXcd>>(M);
    }
    return lu_->solve(rhs);
}

std::vector<cplx> JumpOperator::smooth_part(const SeamFunction& psi, std::size_t e) const {
    const int n = static_cast<int>(N_);
    std::vector<cplx> out(2 * N_ + 1);
    for (std::size_t e2 = 0; e2 < coupling_[e].size(); ++e2) {
        const auto& C = coupling_[e][e2];
        if (C.size() == 0) continue;
        for (int k = 1; k <= n; ++k) {
            const cplx b = psi.at(e2, -k);
            if (b == cplx{}) continue;
            for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j + 1 + n)] += C(k - 1, j) * b;
        }
    }
    return out;
}

ARNSolution solve_arn(const PlumbedCurve& curve, const SeamFunction& phi, const ArnOptions& opts) {
    return solve_arn(std::make_shared<const JumpOperator>(curve, opts.modes), phi, opts);
}

ARNSolution solve_arn(std::shared_ptr<const JumpOperator> op, const SeamFunction& phi, const ArnOptions& opts) {
    const PlumbedCurve& c = op->curve();
    const double scale = std::max(phi.sup_norm(), 1e-300);
    double mean = 0.0;
    for (std::size_t e = 0; e < phi.modes.size(); ++e) mean = std::max(mean, std::abs(phi.at(e, 0)));
    if (mean > 1e-12 * scale && mean > 1e-300)
        fail(ErrorKind::validation, "solve_arn", "jump data has nonzero mean on a seam");
    if (phi.max_compatibility_defect(c) > 1e-9 * scale)
        fail(ErrorKind::validation, "solve_arn", "jump data violates phi_e = -I_e^*(phi_{-e})");

    ARNSolution w;
    w.op = op;
    w.phi = phi;
    const Eigen::VectorXcd rhs = op->pack(phi);

    Eigen::VectorXcd series;
    if (opts.neumann) {
        Eigen::VectorXcd term = rhs;
        series = rhs;
        w.term_norms.push_back(phi.sup_norm());
        const double stop = 1e-17 * std::max(w.term_norms[0], 1e-300);
        bool converged = w.term_norms[0] == 0.0;
        for (std::size_t l = 1; l <= opts.max_terms && !converged; ++l) {
            term = op->apply(term);
            const double tn = op->unpack(term).sup_norm();
            w.term_norms.push_back(tn);
            series += (l % 2 == 0 ? 1.0 : -1.0) * term;
            if (l >= 2 && w.term_norms[l - 2] > 0.0) {
                w.observed_ratio = std::sqrt(tn / w.term_norms[l - 2]);
                if (l >= 4 && w.observed_ratio >= opts.abort_ratio)
                    fail(ErrorKind::numerical, "solve_arn",
                         "Neumann series does not converge (observed ratio " + std::to_string(w.observed_ratio) + "); |s| too large");
            }
            converged = tn <= stop;
        }
        if (!converged) fail(ErrorKind::numerical, "solve_arn", "Neumann series did not reach tolerance");
    }
    Eigen::VectorXcd direct;
    if (!opts.neumann || opts.cross_check) direct = op->solve_direct(rhs);
    if (opts.neumann && opts.cross_check) w.direct_vs_series = (direct - series).cwiseAbs().maxCoeff();
    w.psi = op->unpack(opts.neumann ? series : direct);
    return w;
}

const PlumbedCurve& ARNSolution::curve() const { return op->curve(); }

cplx ARNSolution::operator()(std::size_t v, cplx z) const { return value_without(v, z, npos); }

cplx ARNSolution::value_without(std::size_t v, cplx z, std::size_t skip) const {
    const PlumbedCurve& c = curve();
    const int n = static_cast<int>(psi.N);
    cplx acc{};
    for (std::size_t e : c.graph().incoming(v)) {
        if (e == skip || c.rho(e) == 0.0) continue;
        const cplx dz = z - c.geometry.node_point(e);
        const cplx t = c.rho(e) * c.geometry.chart_scale(e) / dz;
        cplx s{};
        for (int k = n; k >= 1; --k) s = (s + psi.at(e, -k)) * t;
        acc += s / dz;
    }
    return acc;
}

cplx ARNSolution::tail_density(std::size_t e, cplx x) const {
    const int n = static_cast<int>(psi.N);
    const cplx t = 1.0 / x;
    cplx s{};
    for (int k = n; k >= 1; --k) s = (s + psi.at(e, -k)) * t;
    return s;
}

cplx ARNSolution::derivative(std::size_t v, cplx z) const {
    const PlumbedCurve& c = curve();
    const int n = static_cast<int>(psi.N);
    cplx acc{};
    for (std::size_t e : c.graph().incoming(v)) {
        if (c.rho(e) == 0.0) continue;
        const cplx dz = z - c.geometry.node_point(e);
        const cplx t = c.rho(e) * c.geometry.chart_scale(e) / dz;
        cplx s{};
        for (int k = n; k >= 1; --k) s = (s - static_cast<double>(k + 1) * psi.at(e, -k)) * t;
        acc += s / (dz * dz);
    }
    return acc;
}

std::vector<cplx> ARNSolution::outer_modes(std::size_t e) const {
    auto out = op->smooth_part(psi, e);
    const int n = static_cast<int>(psi.N);
    for (int k = 1; k <= n; ++k) out[static_cast<std::size_t>(n - k)] = psi.at(e, -k);
    return out;
}

RationalDifferential ARNSolution::as_rational(std::size_t v) const {
    const PlumbedCurve& c = curve();
    RationalDifferential r;
    for (std::size_t e : c.graph().incoming(v)) {
        const double pr = c.rho(e) * c.geometry.chart_scale(e);
        double p = 1.0;
        for (std::size_t k = 1; k <= psi.N; ++k) {
            p *= pr;
            const cplx b = psi.at(e, -static_cast<int>(k));
            if (b != cplx{} && p != 0.0) r.add_pole_term(c.geometry.node_point(e), k + 1, b * p);
        }
    }
    return r;
}

std::vector<cplx> sokhotski_boundary(const ARNSolution& w, std::size_t e, SeamSide side) {
    if (!w.op) fail(ErrorKind::invalid_argument, "sokhotski_boundary", "unsolved input");
    if (side == SeamSide::outer) return w.outer_modes(e);
    return pull_back(w.curve(), e, w.outer_modes(e ^ 1U));
}

std::vector<cplx> principal_value(const ARNSolution& w, std::size_t e) {
    auto out = w.op->smooth_part(w.psi, e);
    const int n = static_cast<int>(w.psi.N);
    for (int k = 1; k <= n; ++k) {
        out[static_cast<std::size_t>(n - k)] += 0.5 * w.psi.at(e, -k);
        out[static_cast<std::size_t>(n + k)] -= 0.5 * w.psi.at(e, k);
    }
    return out;
}

double arn_l2_norm(const ARNSolution& w, std::size_t v) {
    const int n = static_cast<int>(w.psi.N);
    double acc = 0.0;
    for (std::size_t e : w.curve().graph().incoming(v)) {
        const auto m = w.outer_modes(e);
        for (int k = 1; k <= n; ++k) {
            acc += std::norm(m[static_cast<std::size_t>(n - k)]) / k;
            acc -= std::norm(m[static_cast<std::size_t>(n + k)]) / k;
        }
    }
    return std::sqrt(std::max(0.0, M_PI * acc));
}

double jump_residual(const ARNSolution& w, std::size_t samples) {
    const PlumbedCurve& c = w.curve();
    const CurveGeometry& g = c.geometry;
    double worst = 0.0;
    for (std::size_t e = 0; e < c.graph().oriented_count(); ++e) {
        const std::size_t f = e ^ 1U;
        const double rho = c.rho(e);
        if (rho == 0.0) continue;
        const double ph = c.arg[e >> 1U];
        for (std::size_t i = 0; i < samples; ++i) {
            const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(samples);
            const cplx ze = rho * unit(th);
            const cplx zf = rho * unit(ph - th);
            const cplx out = w(c.graph().target(e), g.from_chart(e, ze)) * g.chart_scale(e) * ze;
            const cplx other = w(c.graph().target(f), g.from_chart(f, zf)) * g.chart_scale(f) * zf;
            worst = std::max(worst, std::abs(out + other - w.phi.value(e, th)));
        }
    }
    return worst;
}

}  // namespace rn
