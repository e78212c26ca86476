#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "schro/dynamics.hpp"
#include "schro/errors.hpp"
#include "schro/floquet.hpp"
#include "schro/model.hpp"

namespace schro {

namespace detail_vel {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    int n = 0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.n = static_cast<int>(x.size());
    if (f.n < 2) throw InsufficientSamples("least_squares: need at least 2 points");
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < f.n; ++i) { sx += x[static_cast<std::size_t>(i)]; sy += y[static_cast<std::size_t>(i)]; }
    const double mx = sx / f.n, my = sy / f.n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < f.n; ++i) {
        const double dx = x[static_cast<std::size_t>(i)] - mx;
        sxx += dx * dx;
        sxy += dx * (y[static_cast<std::size_t>(i)] - my);
    }
    if (sxx == 0.0) throw InsufficientSamples("least_squares: degenerate abscissae");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (f.n > 2) {
        double ss = 0.0;
        for (int i = 0; i < f.n; ++i) {
            const double r = y[static_cast<std::size_t>(i)] - (f.intercept + f.slope * x[static_cast<std::size_t>(i)]);
            ss += r * r;
        }
        f.stderr_slope = std::sqrt(ss / (f.n - 2) / sxx);
    }
    return f;
}

inline LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    return least_squares(lx, ly);
}

} // namespace detail_vel

// Max block group velocity max_{x,l} |dE_l/dx| of A_p(mu, e^{ix}), by the
// Hellmann-Feynman identity dE/dx = <u, A'(x) u>. Needs no band labeling, so
// it works at any mu > 0; used for horizon and lattice-size heuristics.
inline double max_group_velocity(const PeriodicPotential& pot, double mu, int M = 128) {
    const int p = pot.p();
    double vmax = 0.0;
    for (int n = 0; n < M; ++n) {
        const double x = 2.0 * pi * static_cast<double>(n) / static_cast<double>(M);
        const Mat A = build_floquet_x(pot, Coupling::from_mu(mu), x, false);
        Mat dA = Mat::Zero(p, p);
        const cx de = cx(0.0, 1.0) * std::exp(cx(0.0, x));
        dA(0, p - 1) += de;
        dA(p - 1, 0) += std::conj(de);
        const HermitianEig eig = hermitian_eig(A);
        for (int l = 0; l < p; ++l) {
            const Vec u = eig.vectors.col(l);
            const double d = (u.adjoint() * dA * u)(0, 0).real();
            vmax = std::max(vmax, std::abs(d));
        }
    }
    return vmax;
}

// Operator norms ||K(t,d)|| on a (t, d) grid with per-t front radii
// d_front(t) = max{d >= 0 : ||K(t,d)|| >= eps}. Full kernels are retained for
// tail-mass queries.
struct ConeProfile {
    std::vector<double> t;
    int d_max = 0;
    Eigen::MatrixXd norms; // |t| rows, d = 0..d_max columns
    std::vector<int> d_front;
    std::vector<std::vector<BlockKernel>> kernels; // per t, d = -d_max..d_max
    double eps = 1e-6;
    double mu = 0.0;
    int p = 0;
    double eta_fit = 0.0;    // spatial decay rate beyond the front at the last t
    bool monotone_ok = true; // d_front nondecreasing past the transient
};

inline ConeProfile cone_profile(const PeriodicPotential& pot, double mu,
                                const std::vector<double>& ts, int d_max,
                                double eps = 1e-6, int M = 512, int threads = 1) {
    if (!(eps > 1e-12 && eps < 1e-2))
        throw DomainViolation("cone_profile: eps must lie in (1e-12, 1e-2)");
    if (ts.empty()) throw InsufficientSamples("cone_profile: empty time grid");
    ConeProfile cp;
    cp.t = ts;
    cp.d_max = d_max;
    cp.eps = eps;
    cp.mu = mu;
    cp.p = pot.p();
    cp.kernels = block_kernel_sequence(pot, mu, ts, d_max, M, threads);
    const int T = static_cast<int>(ts.size());
    cp.norms.resize(T, d_max + 1);
    cp.d_front.assign(static_cast<std::size_t>(T), -1);
    for (int i = 0; i < T; ++i) {
        for (int d = 0; d <= d_max; ++d) {
            const auto& bk = cp.kernels[static_cast<std::size_t>(i)][static_cast<std::size_t>(d + d_max)];
            cp.norms(i, d) = operator_norm(bk.K);
        }
        for (int d = d_max; d >= 0; --d)
            if (cp.norms(i, d) >= eps) { cp.d_front[static_cast<std::size_t>(i)] = d; break; }
        if (cp.d_front[static_cast<std::size_t>(i)] < 0)
            throw ThresholdNeverCrossed("cone_profile: ||K|| < eps for every d at t = " +
                                        std::to_string(ts[static_cast<std::size_t>(i)]));
    }
    for (int i = 6; i < T; ++i)
        if (cp.d_front[static_cast<std::size_t>(i)] < cp.d_front[static_cast<std::size_t>(i - 1)])
            cp.monotone_ok = false;

    // Exponential tail beyond the front at the latest time: ln||K|| vs d.
    {
        const int i = T - 1;
        std::vector<double> xs, ys;
        for (int d = cp.d_front[static_cast<std::size_t>(i)] + 1; d <= d_max; ++d) {
            const double v = cp.norms(i, d);
            if (v < eps && v >= 1e-9) { xs.push_back(d); ys.push_back(std::log(v)); }
        }
        if (xs.size() < 3) {
            xs.clear(); ys.clear();
            for (int d = cp.d_front[static_cast<std::size_t>(i)] + 1; d <= d_max; ++d) {
                const double v = cp.norms(i, d);
                if (v < eps && v >= 1e-11) { xs.push_back(d); ys.push_back(std::log(v)); }
            }
        }
        cp.eta_fit = (xs.size() >= 2) ? -detail_vel::least_squares(xs, ys).slope : 0.0;
    }
    return cp;
}

struct FrontFit {
    double v = 0.0;
    double stderr_v = 0.0;
    double intercept = 0.0;
    int n_used = 0;
    int n_skipped = 0;
};

// Least-squares slope of d_front(t) past the transient. The first
// max(5, ceil(0.1 / v_lr)) samples are excluded; v_lr <= 0 means "skip 5".
inline FrontFit fit_front_velocity(const ConeProfile& cp, double v_lr = 0.0) {
    int skip = 5;
    if (v_lr > 0.0) skip = std::max(5, static_cast<int>(std::ceil(0.1 / v_lr)));
    const int T = static_cast<int>(cp.t.size());
    if (T - skip < 5)
        throw InsufficientSamples("fit_front_velocity: need >= 5 samples past the transient");
    std::vector<double> xs, ys;
    for (int i = skip; i < T; ++i) {
        xs.push_back(cp.t[static_cast<std::size_t>(i)]);
        ys.push_back(static_cast<double>(cp.d_front[static_cast<std::size_t>(i)]));
    }
    const auto f = detail_vel::least_squares(xs, ys);
    FrontFit out;
    out.v = f.slope;
    out.stderr_v = f.stderr_slope;
    out.intercept = f.intercept;
    out.n_used = f.n;
    out.n_skipped = skip;
    return out;
}

// Decay rate of the tail mass sum_{|d| > v t} ||K||_F^2 in t (positive means
// exponential decay). Fitted over the second half of the time grid.
inline double tail_decay_rate(const ConeProfile& cp, double v) {
    std::vector<double> xs, ys;
    const int T = static_cast<int>(cp.t.size());
    for (int i = T / 2; i < T; ++i) {
        const double tm = tail_mass(cp.kernels[static_cast<std::size_t>(i)], v);
        if (tm > 1e-280) {
            xs.push_back(cp.t[static_cast<std::size_t>(i)]);
            ys.push_back(std::log(tm));
        }
    }
    if (xs.size() < 2) return std::numeric_limits<double>::infinity(); // tail below floor everywhere
    return -detail_vel::least_squares(xs, ys).slope;
}

// Asymptotic velocity from the band formula. Variant A (function-norm
// reading): ((1/2pi) int ||p mu sum_l dzeta_l(x) P_l(x) e_1||^2 dx)^{1/2}.
// Variant B (integrated-vector reading): ||(1/2pi) int p mu sum_l dzeta_l(x)
// P_l(x) e_1 dx||. Site-unit values follow the display literally; block-unit
// values divide by p. Variant A in block units is the one that matches direct
// evolution, and is flagged accordingly.
struct VAsyExact {
    double A_site = 0.0, B_site = 0.0;
    double A_block = 0.0, B_block = 0.0;
    char flagged = 'A';
};

inline VAsyExact v_asy_exact(const PeriodicPotential& pot, double mu, int M = 512,
                             double rho0 = 1.2, int threads = 1) {
    const ConstantsLedger L = constants(pot, rho0);
    if (mu < L.mu0 * (1.0 - 1e-12))
        throw CouplingBelowThreshold("v_asy_exact: mu below mu0, band labeling invalid");
    const int p = pot.p();
    const BandData bd = hermitian_bands(pot, 1.0 / mu, M, rho0, threads);
    double meansq = 0.0;
    Vec meanvec = Vec::Zero(p);
    for (int n = 0; n < M; ++n) {
        Vec w = Vec::Zero(p);
        for (int l = 0; l < p; ++l) {
            const Vec u = bd.vectors[static_cast<std::size_t>(n)].col(l);
            w += bd.dzeta(n, l) * u * std::conj(u[0]);
        }
        meansq += w.squaredNorm();
        meanvec += w;
    }
    meansq /= static_cast<double>(M);
    meanvec /= static_cast<double>(M);
    VAsyExact out;
    out.A_site = p * mu * std::sqrt(meansq);
    out.B_site = p * mu * meanvec.norm();
    out.A_block = out.A_site / p;
    out.B_block = out.B_site / p;
    return out;
}

// 2 pi p^2 mu max|dzeta| together with the closed bound C3 / mu^{p-1}.
struct VAsyUpper {
    double upper = 0.0;
    double bound = 0.0;
    bool chain_ok = false; // upper <= bound
};

inline VAsyUpper v_asy_upper(const PeriodicPotential& pot, double mu, int M = 512,
                             double rho0 = 1.2, int threads = 1) {
    const ConstantsLedger L = constants(pot, rho0);
    if (mu < L.mu0 * (1.0 - 1e-12))
        throw CouplingBelowThreshold("v_asy_upper: mu below mu0");
    const int p = pot.p();
    const BandData bd = hermitian_bands(pot, 1.0 / mu, M, rho0, threads);
    VAsyUpper out;
    out.upper = 2.0 * pi * p * p * mu * max_abs_derivative(bd);
    out.bound = L.C3 / std::pow(mu, p - 1);
    out.chain_ok = out.upper <= out.bound * (1.0 + 1e-12);
    return out;
}

// ||X psi(T)|| / T with X the block-index operator, psi evolved from delta_0.
// Sampled along the run; the reported value is the average of ||X psi(t)||/t
// over the last quarter, and the relative drift there must stay under 2%.
struct VAsyDirect {
    double v = 0.0;
    double drift = 0.0;
    double T = 0.0;
    int half = 0;
    std::vector<std::pair<double, double>> history; // (t, ||X psi(t)||/t)
};

inline VAsyDirect v_asy_direct(const PeriodicPotential& pot, double mu, double T = 0.0,
                               int half = 0, const std::string& method = "chebyshev",
                               double hopping = 1.0, int n_samples = 16) {
    if (n_samples < 8) throw InsufficientSamples("v_asy_direct: need >= 8 samples");
    const int p = pot.p();
    const double vg = (hopping == 0.0) ? 0.0 : max_group_velocity(pot, mu) * std::abs(hopping);
    if (T <= 0.0) {
        const double vest = std::max(vg * 0.5, 1e-9);
        T = std::min(60000.0, std::max(1500.0, 25.0 / vest));
    }
    if (half <= 0)
        half = static_cast<int>(std::ceil(p * vg * 1.1 * T)) + 300;

    VAsyDirect out;
    out.T = T;
    out.half = half;
    LatticeState psi = delta_state(half);
    const double dt = T / static_cast<double>(n_samples);
    std::vector<double> vs;
    for (int i = 1; i <= n_samples; ++i) {
        psi = evolve(pot, mu, psi, dt, method, hopping);
        const double t = dt * static_cast<double>(i);
        const Moments m = position_moments(psi, p);
        const double v = m.rms_block / t;
        out.history.emplace_back(t, v);
        vs.push_back(v);
    }
    const int q0 = (3 * n_samples) / 4;
    double sum = 0.0, lo = vs[static_cast<std::size_t>(q0)], hi = lo;
    for (int i = q0; i < n_samples; ++i) {
        sum += vs[static_cast<std::size_t>(i)];
        lo = std::min(lo, vs[static_cast<std::size_t>(i)]);
        hi = std::max(hi, vs[static_cast<std::size_t>(i)]);
    }
    out.v = sum / static_cast<double>(n_samples - q0);
    if (out.v < 1e-300) { // no propagation (hopping removed)
        out.v = 0.0;
        out.drift = 0.0;
        return out;
    }
    out.drift = (hi - lo) / out.v;
    if (out.drift > 0.02)
        throw NotConverged("v_asy_direct: relative drift " + std::to_string(out.drift) +
                           " over the last quarter exceeds 2%");
    return out;
}

// One mu worth of velocity data; velocities are block index per unit time
// unless suffixed _site.
struct VelocityReport {
    double mu = 0.0;
    double v_front = std::numeric_limits<double>::quiet_NaN();
    double v_front_stderr = std::numeric_limits<double>::quiet_NaN();
    double eta_fit = std::numeric_limits<double>::quiet_NaN();
    double tail_decay = std::numeric_limits<double>::quiet_NaN();
    double v_lr_bound = 0.0; // C2 / mu
    double v_asy_exact_A = std::numeric_limits<double>::quiet_NaN();
    double v_asy_exact_B = std::numeric_limits<double>::quiet_NaN();
    double v_asy_exact_A_site = std::numeric_limits<double>::quiet_NaN();
    double v_asy_exact_B_site = std::numeric_limits<double>::quiet_NaN();
    double v_asy_upper = std::numeric_limits<double>::quiet_NaN();
    double v_asy_bound = std::numeric_limits<double>::quiet_NaN();
    double v_asy_direct = std::numeric_limits<double>::quiet_NaN();
    double direct_drift = std::numeric_limits<double>::quiet_NaN();
    bool chain_ok = false;
};

struct VelocityOptions {
    bool front = true;
    bool direct = false;
    int M = 512;
    int cone_samples = 16;
    double eps = 1e-6;
    double rho0 = 1.2;
    int threads = 1;
    std::string method = "chebyshev";
};

inline VelocityReport build_velocity_report(const PeriodicPotential& pot, double mu,
                                            const VelocityOptions& opt = {}) {
    const ConstantsLedger L = constants(pot, opt.rho0);
    if (mu < L.mu0 * (1.0 - 1e-12))
        throw CouplingBelowThreshold("build_velocity_report: mu below mu0");
    VelocityReport r;
    r.mu = mu;
    r.v_lr_bound = L.C2 / mu;
    const VAsyExact ve = v_asy_exact(pot, mu, opt.M, opt.rho0, opt.threads);
    r.v_asy_exact_A = ve.A_block;
    r.v_asy_exact_B = ve.B_block;
    r.v_asy_exact_A_site = ve.A_site;
    r.v_asy_exact_B_site = ve.B_site;
    const VAsyUpper vu = v_asy_upper(pot, mu, opt.M, opt.rho0, opt.threads);
    r.v_asy_upper = vu.upper;
    r.v_asy_bound = vu.bound;
    r.chain_ok = vu.chain_ok && r.v_asy_exact_A_site <= vu.upper * (1.0 + 1e-12);

    if (opt.front) {
        const double vg = std::max(max_group_velocity(pot, mu), 1e-12);
        const double t_max = 15.0 / vg;
        std::vector<double> ts;
        for (int i = 1; i <= opt.cone_samples; ++i)
            ts.push_back(t_max * static_cast<double>(i) / opt.cone_samples);
        const int d_max = static_cast<int>(std::ceil(vg * t_max)) + 80;
        const ConeProfile cp =
            cone_profile(pot, mu, ts, d_max, opt.eps, opt.M, opt.threads);
        const FrontFit ff = fit_front_velocity(cp, r.v_lr_bound);
        r.v_front = ff.v;
        r.v_front_stderr = ff.stderr_v;
        r.eta_fit = cp.eta_fit;
        r.tail_decay = tail_decay_rate(cp, 2.0 * std::max(ff.v, 1e-12));
    }
    if (opt.direct) {
        const VAsyDirect vd = v_asy_direct(pot, mu, 0.0, 0, opt.method);
        r.v_asy_direct = vd.v;
        r.direct_drift = vd.drift;
    }
    return r;
}

// Appendix-A style consistency: measured velocities sit below the
// light-cone bound C2/mu. Margins are relative to the bound.
struct AppendixACheck {
    bool exact_ok = false;
    bool direct_ok = true; // vacuously true when direct was not run
    bool pass = false;
    double margin_exact = 0.0;
    double margin_direct = std::numeric_limits<double>::quiet_NaN();
};

inline AppendixACheck check_appendix_a(const VelocityReport& r) {
    AppendixACheck c;
    c.exact_ok = r.v_asy_exact_A <= r.v_lr_bound;
    c.margin_exact = (r.v_lr_bound - r.v_asy_exact_A) / r.v_lr_bound;
    if (std::isfinite(r.v_asy_direct)) {
        c.direct_ok = r.v_asy_direct <= r.v_lr_bound;
        c.margin_direct = (r.v_lr_bound - r.v_asy_direct) / r.v_lr_bound;
    }
    c.pass = c.exact_ok && c.direct_ok;
    return c;
}

struct SweepResult {
    std::vector<VelocityReport> rows;
    double exponent_exact = 0.0; // log-log slope of v_asy_exact_A vs mu
    double exponent_exact_stderr = 0.0;
    double exponent_front = std::numeric_limits<double>::quiet_NaN();
    bool monotone_exact = true;
    bool appendix_pass = true;
};

// mu sweep: >= 4 values spanning >= one decade, all >= mu0.
inline SweepResult scaling_sweep(const PeriodicPotential& pot,
                                 const std::vector<double>& mus,
                                 const VelocityOptions& opt = {}) {
    if (mus.size() < 4)
        throw InsufficientSamples("scaling_sweep: need at least 4 mu values");
    const auto [lo, hi] = std::minmax_element(mus.begin(), mus.end());
    if (*hi / *lo < 10.0 * (1.0 - 1e-12))
        throw DomainViolation("scaling_sweep: mu values must span at least one decade");
    const ConstantsLedger L = constants(pot, opt.rho0);
    for (double mu : mus)
        if (mu < L.mu0 * (1.0 - 1e-12))
            throw CouplingBelowThreshold("scaling_sweep: every mu must be >= mu0");

    SweepResult res;
    for (double mu : mus) res.rows.push_back(build_velocity_report(pot, mu, opt));
    std::vector<double> xs, ya, yf;
    for (const auto& r : res.rows) {
        xs.push_back(r.mu);
        ya.push_back(r.v_asy_exact_A);
        yf.push_back(r.v_front);
        if (!check_appendix_a(r).pass) res.appendix_pass = false;
    }
    const auto fa = detail_vel::loglog_fit(xs, ya);
    res.exponent_exact = fa.slope;
    res.exponent_exact_stderr = fa.stderr_slope;
    if (opt.front) res.exponent_front = detail_vel::loglog_fit(xs, yf).slope;
    std::vector<std::size_t> order(res.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return res.rows[a].mu < res.rows[b].mu;
    });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (!(res.rows[order[i]].v_asy_exact_A < res.rows[order[i - 1]].v_asy_exact_A))
            res.monotone_exact = false;
    return res;
}

} // namespace schro
