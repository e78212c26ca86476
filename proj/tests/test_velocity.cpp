#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "schro/model.hpp"
#include "schro/quadrature.hpp"
#include "schro/velocity.hpp"

using namespace schro;
using Catch::Approx;

namespace {

const PeriodicPotential pot2 = new_potential({1.0, -1.0});
const PeriodicPotential pot3 = new_potential({1.0, 0.0, -1.0});

// stationary-point closed form for the p = 2 group velocity
// max_x |sin x| / sqrt(mu^2 + 2 + 2 cos x): cos x* solves
// cos^2 + (mu^2 + 2) cos + 1 = 0 on (-1, 0).
double vg_p2_closed(double mu) {
    const double q = mu * mu + 2.0;
    const double c = (-q + std::sqrt(q * q - 4.0)) / 2.0;
    const double s2 = 1.0 - c * c;
    return std::sqrt(s2 / (q + 2.0 * c));
}

} // namespace

TEST_CASE("least squares recovers exact lines and power laws") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(3.5 - 2.0 * x);
    const auto f = detail_vel::least_squares(xs, ys);
    CHECK(f.slope == Approx(-2.0).epsilon(1e-13));
    CHECK(f.intercept == Approx(3.5).epsilon(1e-13));
    CHECK(f.stderr_slope == Approx(0.0).margin(1e-12));

    std::vector<double> mus, vs;
    for (int i = 0; i < 8; ++i) {
        const double mu = 9.0 * std::pow(10.0, i / 7.0);
        mus.push_back(mu);
        vs.push_back(0.7 * std::pow(mu, -3.0));
    }
    const auto g = detail_vel::loglog_fit(mus, vs);
    CHECK(g.slope == Approx(-3.0).epsilon(1e-12));
    CHECK(g.intercept == Approx(std::log(0.7)).epsilon(1e-10));

    // nonpositive values are dropped before the log; the two survivors
    // (1, 1) and (3, e^2) still define a line
    const std::vector<double> xs2 = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> ys2 = {1.0, -1.0, std::exp(2.0), 0.0};
    const auto h = detail_vel::loglog_fit(xs2, ys2);
    CHECK(h.slope == Approx(2.0 / std::log(3.0)).epsilon(1e-12));
    CHECK(h.intercept == Approx(0.0).margin(1e-14));

    // with a single survivor the fit is refused
    const std::vector<double> xs3 = {1.0, 2.0, 3.0};
    const std::vector<double> ys3 = {1.0, -1.0, 0.0};
    CHECK_THROWS_AS(detail_vel::loglog_fit(xs3, ys3), InsufficientSamples);

    CHECK_THROWS_AS(detail_vel::least_squares({1.0}, {2.0}), InsufficientSamples);
    CHECK_THROWS_AS(detail_vel::least_squares({2.0, 2.0}, {1.0, 5.0}),
                    InsufficientSamples);
}

TEST_CASE("group velocity matches the p = 2 stationary-point form") {
    for (double mu : {3.0, 5.0, 10.0}) {
        const double expected = vg_p2_closed(mu);
        CHECK(max_group_velocity(pot2, mu, 4096) == Approx(expected).epsilon(1e-5));
    }
    // decays like 1/sqrt(mu^2 + 2) at strong coupling
    CHECK(max_group_velocity(pot2, 40.0, 1024) ==
          Approx(1.0 / std::sqrt(1602.0)).epsilon(1e-3));
}

TEST_CASE("cone profile: kernel norms are contractions and the front is sane") {
    const double mu = 9.0;
    std::vector<double> ts;
    for (int i = 1; i <= 12; ++i) ts.push_back(5.0 * i);
    const ConeProfile cp = cone_profile(pot2, mu, ts, 30, 1e-6, 256);
    REQUIRE(cp.t.size() == 12);
    for (int i = 0; i < 12; ++i)
        for (int d = 0; d <= cp.d_max; ++d)
            CHECK(cp.norms(i, d) <= 1.0 + 1e-10); // propagator blocks never exceed 1
    for (int fr : cp.d_front) {
        CHECK(fr >= 0);
        CHECK(fr <= cp.d_max);
    }
    CHECK(cp.monotone_ok);
    CHECK(cp.eta_fit > 0.0); // beyond-front decay is exponential

    // front radius grows with t and stays under the ballistic limit. The
    // eps level set sits at vg t plus the threshold depth log(1/eps)/eta
    // and an O(t^{1/3}) broadening of the front region.
    const double vg = max_group_velocity(pot2, mu);
    const double depth = std::log(1.0 / 1e-6) / cp.eta_fit;
    for (int i = 0; i < 12; ++i) {
        const double t = ts[static_cast<std::size_t>(i)];
        CHECK(cp.d_front[static_cast<std::size_t>(i)] <=
              vg * t + depth + std::cbrt(t) + 2.0);
        if (i > 0)
            CHECK(cp.d_front[static_cast<std::size_t>(i)] + 1 >=
                  cp.d_front[static_cast<std::size_t>(i - 1)]);
    }
}

TEST_CASE("front velocity fit stays below the light-cone bound") {
    const double mu = 9.0;
    const ConstantsLedger L = constants(pot2);
    REQUIRE(mu >= L.mu0);
    const double vg = max_group_velocity(pot2, mu);
    const double t_max = 15.0 / vg;
    std::vector<double> ts;
    for (int i = 1; i <= 16; ++i) ts.push_back(t_max * i / 16.0);
    const int d_max = static_cast<int>(std::ceil(vg * t_max)) + 40;
    const ConeProfile cp = cone_profile(pot2, mu, ts, d_max, 1e-6, 256);
    const FrontFit ff = fit_front_velocity(cp, L.C2 / mu);
    CHECK(ff.v > 0.0);
    CHECK(ff.v <= L.C2 / mu);
    CHECK(ff.n_used + ff.n_skipped == 16);
    const double td = tail_decay_rate(cp, 2.0 * ff.v);
    CHECK(td > 0.0); // includes +infinity when the tail sits below the floor
}

TEST_CASE("cone profile guards") {
    CHECK_THROWS_AS(cone_profile(pot2, 9.0, {1.0, 2.0}, 10, 0.5, 64), DomainViolation);
    CHECK_THROWS_AS(cone_profile(pot2, 9.0, {1.0, 2.0}, 10, 1e-13, 64), DomainViolation);
    CHECK_THROWS_AS(cone_profile(pot2, 9.0, {}, 10, 1e-6, 64), InsufficientSamples);

    // 8 samples leave only 3 points past the transient
    std::vector<double> ts;
    for (int i = 1; i <= 8; ++i) ts.push_back(4.0 * i);
    const ConeProfile cp = cone_profile(pot2, 9.0, ts, 16, 1e-6, 64);
    CHECK_THROWS_AS(fit_front_velocity(cp), InsufficientSamples);
}

TEST_CASE("exact asymptotic velocity against the p = 2 reduction") {
    // For p = 2 the projector weights collapse: ||w(x)||^2 = |zeta'(x)|^2, so
    // variant A reduces to 2 mu sqrt(mean of the closed-form derivative^2).
    for (double mu : {10.0, 20.0}) {
        const double lambda = 1.0 / mu;
        const double mean_sq = periodic_mean(
            [&](double x) {
                const double denom = 4.0 + 8.0 * lambda * lambda * (1.0 + std::cos(x));
                const double d2 = 4.0 * std::pow(lambda, 4) * std::pow(std::sin(x), 2) / denom;
                return d2;
            },
            512);
        const double expected_site = 2.0 * mu * std::sqrt(mean_sq);
        const VAsyExact v = v_asy_exact(pot2, mu, 512);
        CHECK(v.A_site == Approx(expected_site).epsilon(1e-10));
        CHECK(v.A_block == Approx(expected_site / 2.0).epsilon(1e-10));
        CHECK(v.flagged == 'A');
    }
}

TEST_CASE("variant A dominates variant B") {
    // Jensen: the norm of the mean never exceeds the mean of the norms.
    for (double mu : {10.0, 15.0}) {
        const VAsyExact v2 = v_asy_exact(pot2, mu, 256);
        CHECK(v2.B_site <= v2.A_site * (1.0 + 1e-12));
        CHECK(v2.B_block <= v2.A_block * (1.0 + 1e-12));
    }
    const VAsyExact v3 = v_asy_exact(pot3, 50.0, 256);
    CHECK(v3.B_site <= v3.A_site * (1.0 + 1e-12));
}

TEST_CASE("velocity chain: exact <= sampled upper <= closed bound") {
    for (int p : {2, 3, 4}) {
        std::vector<double> v(static_cast<std::size_t>(p));
        for (int i = 0; i < p; ++i)
            v[static_cast<std::size_t>(i)] = 1.0 - 2.0 * i / std::max(1, p - 1);
        const PeriodicPotential pot = new_potential(v);
        const ConstantsLedger L = constants(pot);
        for (double factor : {1.0, 2.0}) {
            const double mu = factor * L.mu0;
            const VAsyExact ve = v_asy_exact(pot, mu, 256);
            const VAsyUpper vu = v_asy_upper(pot, mu, 256);
            CHECK(vu.chain_ok);
            CHECK(ve.A_site <= vu.upper * (1.0 + 1e-12));
            CHECK(vu.upper <= vu.bound * (1.0 + 1e-12));
            CHECK(vu.bound == Approx(L.C3 / std::pow(mu, p - 1)).epsilon(1e-13));
        }
    }
}

TEST_CASE("velocity threshold gates") {
    const ConstantsLedger L = constants(pot2);
    CHECK_THROWS_AS(v_asy_exact(pot2, 0.9 * L.mu0, 128), CouplingBelowThreshold);
    CHECK_THROWS_AS(v_asy_upper(pot2, 0.9 * L.mu0, 128), CouplingBelowThreshold);
    CHECK_THROWS_AS(build_velocity_report(pot2, 0.9 * L.mu0), CouplingBelowThreshold);
    // mu = mu0 itself survives the reciprocal round trip
    CHECK_NOTHROW(v_asy_exact(pot2, L.mu0, 128));
    CHECK_NOTHROW(v_asy_upper(pot2, L.mu0, 128));
}

TEST_CASE("direct velocity guards") {
    CHECK_THROWS_AS(v_asy_direct(pot2, 10.0, 0.0, 0, "chebyshev", 1.0, 4),
                    InsufficientSamples);
}

TEST_CASE("velocity report and appendix check") {
    const ConstantsLedger L = constants(pot2);
    VelocityOptions opt;
    opt.front = false;
    opt.M = 256;
    const VelocityReport r = build_velocity_report(pot2, 2.0 * L.mu0, opt);
    CHECK(r.v_lr_bound == Approx(L.C2 / (2.0 * L.mu0)).epsilon(1e-13));
    CHECK(r.chain_ok);
    CHECK(std::isnan(r.v_front));      // front stage disabled
    CHECK(std::isnan(r.v_asy_direct)); // direct stage disabled
    CHECK(r.v_asy_exact_A > 0.0);
    CHECK(r.v_asy_exact_A_site == Approx(2.0 * r.v_asy_exact_A).epsilon(1e-13));

    const AppendixACheck ac = check_appendix_a(r);
    CHECK(ac.exact_ok);
    CHECK(ac.direct_ok); // vacuous without the direct stage
    CHECK(ac.pass);
    CHECK(ac.margin_exact > 0.0);
    CHECK(std::isnan(ac.margin_direct));

    VelocityReport fail = r;
    fail.v_asy_direct = 10.0 * fail.v_lr_bound;
    const AppendixACheck bad = check_appendix_a(fail);
    CHECK(bad.exact_ok);
    CHECK_FALSE(bad.direct_ok);
    CHECK_FALSE(bad.pass);
    CHECK(bad.margin_direct < 0.0);
}

TEST_CASE("scaling sweep over one decade of mu") {
    const ConstantsLedger L = constants(pot2);
    VelocityOptions opt;
    opt.front = false;
    opt.M = 128;
    const std::vector<double> mus = {L.mu0, 2.0 * L.mu0, 4.0 * L.mu0, 10.0 * L.mu0};
    const SweepResult res = scaling_sweep(pot2, mus, opt);
    REQUIRE(res.rows.size() == 4);
    CHECK(res.monotone_exact);
    CHECK(res.appendix_pass);
    // v ~ mu^{-(p-1)} = mu^{-1} for p = 2
    CHECK(res.exponent_exact == Approx(-1.0).margin(0.05));
    CHECK(std::isnan(res.exponent_front));
}

TEST_CASE("scaling sweep guards") {
    const ConstantsLedger L = constants(pot2);
    VelocityOptions opt;
    opt.front = false;
    opt.M = 128;
    const std::vector<double> three = {L.mu0, 2.0 * L.mu0, 10.0 * L.mu0};
    CHECK_THROWS_AS(scaling_sweep(pot2, three, opt), InsufficientSamples);
    const std::vector<double> narrow = {L.mu0, 2.0 * L.mu0, 3.0 * L.mu0, 5.0 * L.mu0};
    CHECK_THROWS_AS(scaling_sweep(pot2, narrow, opt), DomainViolation);
    const std::vector<double> low = {0.5 * L.mu0, L.mu0, 2.0 * L.mu0, 10.0 * L.mu0};
    CHECK_THROWS_AS(scaling_sweep(pot2, low, opt), CouplingBelowThreshold);
}
