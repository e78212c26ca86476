// Acceptance gate: one line per criterion, nonzero exit if any fail.
// Tolerances and wall-clock budgets are pinned here, not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "schro/charpoly.hpp"
#include "schro/detail/random.hpp"
#include "schro/dynamics.hpp"
#include "schro/floquet.hpp"
#include "schro/highprec.hpp"
#include "schro/model.hpp"
#include "schro/velocity.hpp"

using namespace schro;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

void report(int id, const char* name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("%s %2d %-38s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
}

double secs(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

PeriodicPotential canonical(int p) {
    if (p == 2) return new_potential({1.0, -1.0});
    std::vector<double> v(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) v[static_cast<std::size_t>(i)] = i;
    return new_potential(v);
}

std::size_t fib(int n) {
    std::size_t a = 0, b = 1;
    for (int i = 0; i < n; ++i) {
        const std::size_t c = a + b;
        a = b;
        b = c;
    }
    return a;
}

struct DirectPoint {
    int p;
    double mu;
    double v;
    double bound;
};

} // namespace

int main() {
    std::printf("acceptance: 11 criteria\n");
    std::fflush(stdout);

    double max_defect = 0.0; // block-kernel unitarity, worst over all runs
    double max_drift = 0.0;  // real-space norm drift, worst over all runs
    std::vector<DirectPoint> direct_points;

    // 1. Matching-sum determinant formula vs brute-force reference.
    try {
        const auto t0 = clk::now();
        detail::Rng rng(12345);
        double worst = 0.0;
        for (int p = 2; p <= 12; ++p) {
            for (int i = 0; i < 1000; ++i) {
                JacobiSpec s;
                s.a.resize(static_cast<std::size_t>(p));
                s.b.resize(static_cast<std::size_t>(p - 1));
                for (auto& a : s.a) a = rng.complex_box(-3.0, 3.0);
                for (auto& b : s.b) b = rng.complex_box(-3.0, 3.0);
                const cx ref = det_bruteforce(s);
                worst = std::max(worst, std::abs(det_formula(s) - ref) / std::abs(ref));
            }
        }
        bool fib_ok = true;
        for (int p = 2; p <= 12; ++p)
            if (enumerate_matchings(p).total() != fib(p + 1)) fib_ok = false;
        const bool six_ok =
            enumerate_matchings(6).counts() == std::vector<std::size_t>{1, 5, 6, 1};
        const double el = secs(t0);
        const bool pass = worst <= 1e-10 && fib_ok && six_ok && el < 5.0;
        report(1, "determinant formula agreement", pass,
               fmt("worst rel %.2e (tol 1e-10), totals %s, p6 counts %s; %.1fs < 5s",
                   worst, fib_ok ? "Fibonacci" : "WRONG", six_ok ? "(1,5,6,1)" : "WRONG",
                   el));
    } catch (const std::exception& e) {
        report(1, "determinant formula agreement", false, fmt("exception: %s", e.what()));
    }

    // 2. p = 2 closed-form kernel vs quadrature, entrywise.
    try {
        const auto t0 = clk::now();
        const PeriodicPotential pot = canonical(2);
        double worst = 0.0;
        for (const double mu : {1.0, 3.0, 10.0}) {
            for (const double t : {1.0, 5.0, 20.0}) {
                const std::vector<BlockKernel> ks = block_kernels(pot, mu, t, 30, 512);
                max_defect = std::max(max_defect, unitarity_defect(ks));
                for (const BlockKernel& bk : ks) {
                    const BlockKernel cl = block_kernel_p2_closed(mu, t, bk.d);
                    worst = std::max(worst, (bk.K - cl.K).cwiseAbs().maxCoeff());
                }
            }
        }
        const double el = secs(t0);
        const bool pass = worst <= 1e-8 && el < 30.0;
        report(2, "closed-form kernel agreement (p=2)", pass,
               fmt("worst entry diff %.2e (tol 1e-8) over mu {1,3,10} x t {1,5,20}, "
                   "|d|<=30; %.1fs < 30s",
                   worst, el));
    } catch (const std::exception& e) {
        report(2, "closed-form kernel agreement (p=2)", false,
               fmt("exception: %s", e.what()));
    }

    // 3. Fiber-integral kernels vs truncated real-space evolution.
    try {
        const auto t0 = clk::now();
        const PeriodicPotential pot = canonical(3);
        const double mu = 5.0;
        const int half = 1000; // 2001 sites
        double worst = 0.0;
        for (const double t : {1.0, 5.0, 10.0}) {
            const std::vector<BlockKernel> ks = block_kernels(pot, mu, t, 20, 512);
            max_defect = std::max(max_defect, unitarity_defect(ks));
            const LatticeState psi = evolve(pot, mu, delta_state(half), t);
            max_drift = std::max(max_drift, std::abs(psi.norm() - 1.0));
            for (const BlockKernel& bk : ks)
                for (int m = 1; m <= 3; ++m)
                    worst = std::max(
                        worst, std::abs(psi.at(site_index(bk.d, m, 3)) - bk.K(m - 1, 0)));
        }
        const double el = secs(t0);
        const bool pass = worst <= 1e-6 && el < 120.0;
        report(3, "fiber kernels match real-space flow", pass,
               fmt("worst diff %.2e (tol 1e-6), p=3 mu=5 t<=10 |d|<=20 N=2001; "
                   "%.1fs < 120s",
                   worst, el));
    } catch (const std::exception& e) {
        report(3, "fiber kernels match real-space flow", false,
               fmt("exception: %s", e.what()));
    }

    // 4. Eigenvalue localization on both annulus circles.
    try {
        int bad = 0, total = 0;
        double worst_ratio = 0.0;
        for (const int p : {2, 3, 4, 5}) {
            const PeriodicPotential pot = canonical(p);
            const double l0 = constants(pot).lambda0;
            for (const double lambda : {l0, l0 / 2.0, l0 / 10.0}) {
                const LocalizationReport rep = verify_localization(pot, lambda, 64);
                worst_ratio = std::max(worst_ratio, rep.worst_ratio);
                total += static_cast<int>(rep.entries.size());
                for (const LocalizationEntry& e : rep.entries)
                    if (!e.pass) ++bad;
                if (!rep.pass) ++bad;
            }
        }
        report(4, "eigenvalue localization", bad == 0,
               fmt("%d/%d samples outside budget, worst ratio %.3g (need <= 1), "
                   "p in {2..5}, 64 z per circle, 3 couplings",
                   bad, total, worst_ratio));
    } catch (const std::exception& e) {
        report(4, "eigenvalue localization", false, fmt("exception: %s", e.what()));
    }

    // 5. Band-derivative formula vs high-precision central differences.
    try {
        double worst_rel = 0.0, worst_abs = 0.0;
        for (const int p : {3, 4, 5}) {
            const PeriodicPotential pot = canonical(p);
            const double lambda = constants(pot).lambda0 / 2.0;
            for (int n = 0; n < 256; ++n) {
                const double x = 2.0 * pi * n / 256.0;
                const std::vector<cx> zc =
                    annulus_eigenvalues(pot, lambda, std::exp(cx(0.0, x)));
                std::vector<double> zeta(zc.size());
                for (std::size_t l = 0; l < zc.size(); ++l) zeta[l] = zc[l].real();
                const std::vector<double> ref =
                    band_derivative_cstep_hp(pot, lambda, x);
                for (int l = 0; l < p; ++l) {
                    const double ana = band_derivative(pot, lambda, x, zeta, l);
                    const double diff =
                        std::abs(ana - ref[static_cast<std::size_t>(l)]);
                    if (std::abs(std::sin(x)) > 1e-3)
                        worst_rel = std::max(
                            worst_rel, diff / std::abs(ref[static_cast<std::size_t>(l)]));
                    else
                        worst_abs = std::max(worst_abs, diff);
                }
            }
        }
        const bool pass = worst_rel <= 1e-6 && worst_abs <= 1e-8;
        report(5, "band derivative formula", pass,
               fmt("worst rel %.2e (tol 1e-6), worst abs %.2e (tol 1e-8), "
                   "p in {3,4,5}, 256 nodes",
                   worst_rel, worst_abs));
    } catch (const std::exception& e) {
        report(5, "band derivative formula", false, fmt("exception: %s", e.what()));
    }

    // 6. Weighted matching sum stays inside its a-priori bound.
    try {
        int bad = 0;
        double worst = 0.0;
        for (const int p : {3, 4, 5, 6}) {
            const PeriodicPotential pot = canonical(p);
            const double half_gap = pot.gap() / 2.0;
            const int shells = (32 + p - 1) / p;
            for (int i = 0; i < 32; ++i) {
                const double lambda = static_cast<double>(i) / 31.0;
                for (int j = 0; j < 32; ++j) {
                    const int band = j % p;
                    const int k = j / p;
                    const double r = 0.999 * half_gap * (k + 1) / shells;
                    const double th = 2.39996322972865332 * (j + 1);
                    const cx zeta = cx(pot.at(band + 1), 0.0) +
                                    r * std::exp(cx(0.0, th));
                    const HpValue h = h_p_eval(pot, lambda, zeta);
                    worst = std::max(worst, std::abs(h.value) / h.bound);
                    if (!h.within) ++bad;
                }
            }
        }
        report(6, "matching-sum bound", bad == 0,
               fmt("%d/4096 samples above bound, worst |h|/bound %.3g, "
                   "p in {3..6}, 32x32 grid",
                   bad, worst));
    } catch (const std::exception& e) {
        report(6, "matching-sum bound", false, fmt("exception: %s", e.what()));
    }

    // 7. Velocity bound chain at every sweep point.
    try {
        int bad = 0, total = 0;
        double worst_a = 0.0, worst_b = 0.0; // A_site/upper and upper/bound
        for (const int p : {2, 3, 4}) {
            const PeriodicPotential pot = canonical(p);
            const double mu0 = constants(pot).mu0;
            for (const double f : {1.0, std::pow(10.0, 1.0 / 3.0),
                                   std::pow(10.0, 2.0 / 3.0), 10.0}) {
                const double mu = mu0 * f;
                const VAsyExact ve = v_asy_exact(pot, mu, 256);
                const VAsyUpper vu = v_asy_upper(pot, mu, 256);
                ++total;
                worst_a = std::max(worst_a, ve.A_site / vu.upper);
                worst_b = std::max(worst_b, vu.upper / vu.bound);
                if (!(ve.A_site <= vu.upper * (1.0 + 1e-12) && vu.chain_ok)) ++bad;
            }
        }
        report(7, "velocity bound chain", bad == 0,
               fmt("%d/%d points violate exact <= upper <= C3/mu^(p-1); "
                   "worst exact/upper %.3g, worst upper/bound %.3g",
                   bad, total, worst_a, worst_b));
    } catch (const std::exception& e) {
        report(7, "velocity bound chain", false, fmt("exception: %s", e.what()));
    }

    // 8. Scaling exponents: band-formula path, then direct dynamics.
    {
        bool band_ok = true;
        std::string band_note;
        try {
            const auto t0 = clk::now();
            std::string parts;
            for (const int p : {2, 3, 4}) {
                const PeriodicPotential pot = canonical(p);
                const double mu0 = constants(pot).mu0;
                std::vector<double> mus;
                for (int i = 0; i < 8; ++i)
                    mus.push_back(mu0 * std::pow(10.0, i / 7.0));
                VelocityOptions opt;
                opt.front = false;
                opt.M = 256;
                const SweepResult sw = scaling_sweep(pot, mus, opt);
                const double want = -(p - 1.0);
                if (std::abs(sw.exponent_exact - want) > 0.1) band_ok = false;
                parts += fmt("%sp%d %.3f", parts.empty() ? "" : ", ", p,
                             sw.exponent_exact);
            }
            const double el = secs(t0);
            if (el >= 60.0) band_ok = false;
            band_note = fmt("band slopes {%s} vs -(p-1) +-0.1, %.1fs < 60s", parts.c_str(), el);
        } catch (const std::exception& e) {
            band_ok = false;
            band_note = fmt("band path exception: %s", e.what());
        }

        bool direct_ok = true;
        std::string direct_note;
        try {
            const auto t0 = clk::now();
            std::string parts;
            const struct {
                int p;
                std::vector<double> factors;
                double tol;
            } campaigns[] = {
                {2, {1.0, std::pow(10.0, 1.0 / 3.0), std::pow(10.0, 2.0 / 3.0), 10.0},
                 0.15},
                {3, {1.0, 1.5, 2.0}, 0.2},
            };
            for (const auto& c : campaigns) {
                const PeriodicPotential pot = canonical(c.p);
                const ConstantsLedger L = constants(pot);
                std::vector<double> mus, vs;
                for (const double f : c.factors) {
                    const double mu = L.mu0 * f;
                    const VAsyDirect vd = v_asy_direct(pot, mu);
                    mus.push_back(mu);
                    vs.push_back(vd.v);
                    direct_points.push_back({c.p, mu, vd.v, L.C2 / mu});
                }
                const double slope = detail_vel::loglog_fit(mus, vs).slope;
                if (std::abs(slope + (c.p - 1.0)) > c.tol) direct_ok = false;
                parts += fmt("%sp%d %.3f (tol %.2f)", parts.empty() ? "" : ", ", c.p,
                             slope, c.tol);
            }
            const double el = secs(t0);
            if (el >= 900.0) direct_ok = false;
            direct_note = fmt("direct slopes {%s}, %.0fs < 900s", parts.c_str(), el);
        } catch (const std::exception& e) {
            direct_ok = false;
            direct_note = fmt("direct path exception: %s", e.what());
        }

        report(8, "scaling exponent recovery", band_ok && direct_ok,
               band_note + "; " + direct_note);
    }

    // 9. Light-cone envelope: fitted front speed, spatial and tail decay.
    try {
        int bad = 0;
        double worst_front = 0.0; // v_front / (C2/mu)
        for (const int p : {2, 3}) {
            const PeriodicPotential pot = canonical(p);
            const ConstantsLedger L = constants(pot);
            for (const double f : {1.0, 2.0, 4.0}) {
                const double mu = L.mu0 * f;
                const double vg = max_group_velocity(pot, mu, 256);
                // Front target of 8 blocks: far enough for a clean front fit,
                // short enough that the tail-mass window stays above the
                // double-precision phase floor at t ~ 1e5.
                const double t_max = 8.0 / vg;
                std::vector<double> ts;
                for (int i = 1; i <= 16; ++i) ts.push_back(t_max * i / 16.0);
                const int d_max = static_cast<int>(std::ceil(vg * t_max)) + 40;
                const ConeProfile cp = cone_profile(pot, mu, ts, d_max, 1e-6, 256);
                max_defect = std::max(max_defect, unitarity_defect(cp.kernels.back()));
                const double v_lr = L.C2 / mu;
                const FrontFit ff = fit_front_velocity(cp, v_lr);
                const double rate =
                    tail_decay_rate(cp, 2.0 * std::max(ff.v, 1e-12));
                worst_front = std::max(worst_front, ff.v / v_lr);
                if (!(ff.v <= v_lr * (1.0 + 1e-9)) || !(cp.eta_fit > 0.0) ||
                    !(rate > 0.0))
                    ++bad;
            }
        }
        report(9, "light-cone envelope", bad == 0,
               fmt("%d/6 profiles violate v_front <= C2/mu, eta > 0, tail rate > 0; "
                   "worst v_front/(C2/mu) %.2e",
                   bad, worst_front));
    } catch (const std::exception& e) {
        report(9, "light-cone envelope", false, fmt("exception: %s", e.what()));
    }

    // 10. Direct asymptotic velocity stays under the propagation bound.
    try {
        if (direct_points.empty())
            throw NotConverged("no direct-dynamics points available");
        int bad = 0;
        double min_margin = 1.0;
        for (const DirectPoint& d : direct_points) {
            const double margin = (d.bound - d.v) / d.bound;
            min_margin = std::min(min_margin, margin);
            if (d.v > d.bound) ++bad;
        }
        report(10, "direct velocity under bound", bad == 0,
               fmt("%d/%zu points above C2/mu, smallest margin %.6f of the bound", bad,
                   direct_points.size(), min_margin));
    } catch (const std::exception& e) {
        report(10, "direct velocity under bound", false, fmt("exception: %s", e.what()));
    }

    // 11. Unitarity: kernel row sums and real-space norm conservation.
    try {
        const PeriodicPotential p2 = canonical(2);
        const PeriodicPotential p3 = canonical(3);
        {
            const double mu = constants(p2).mu0;
            const double vg = max_group_velocity(p2, mu, 256);
            const int half = static_cast<int>(std::ceil(2.0 * vg * 1.1 * 40.0)) + 300;
            const LatticeState psi = evolve(p2, mu, delta_state(half), 40.0);
            max_drift = std::max(max_drift, std::abs(psi.norm() - 1.0));
        }
        {
            const double vg = max_group_velocity(p3, 50.0, 256);
            const int half = static_cast<int>(std::ceil(3.0 * vg * 1.1 * 20.0)) + 300;
            const LatticeState psi = evolve(p3, 50.0, delta_state(half), 20.0);
            max_drift = std::max(max_drift, std::abs(psi.norm() - 1.0));
        }
        const bool pass = max_defect <= 1e-8 && max_drift <= 1e-10;
        report(11, "unitarity", pass,
               fmt("worst kernel defect %.2e (tol 1e-8), worst norm drift %.2e "
                   "(tol 1e-10) over all runs",
                   max_defect, max_drift));
    } catch (const std::exception& e) {
        report(11, "unitarity", false, fmt("exception: %s", e.what()));
    }

    std::printf("acceptance: %d/11 passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
