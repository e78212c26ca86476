#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "schro/detail/random.hpp"
#include "schro/model.hpp"

using namespace schro;
using Catch::Approx;

namespace {

PeriodicPotential random_potential(detail::Rng& rng, int p) {
    for (;;) {
        std::vector<double> v(static_cast<std::size_t>(p));
        for (auto& x : v) x = rng.uniform(-3.0, 3.0);
        double gap = 1e300;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j)
                gap = std::min(gap, std::abs(v[static_cast<std::size_t>(i)] -
                                             v[static_cast<std::size_t>(j)]));
        if (gap > 0.05) return new_potential(v);
    }
}

} // namespace

TEST_CASE("potential gap and range") {
    const PeriodicPotential pot = new_potential({0.0, 0.3, 1.0});
    CHECK(pot.p() == 3);
    CHECK(pot.gap() == Approx(0.3).epsilon(1e-15));
    CHECK(pot.range() == Approx(1.0).epsilon(1e-15));
    CHECK(pot.min_value() == 0.0);
    CHECK(pot.max_value() == 1.0);
    CHECK(pot.at(1) == 0.0);
    CHECK(pot.at(3) == 1.0);
}

TEST_CASE("periodic extension uses the positive representative") {
    const PeriodicPotential pot = new_potential({1.0, -1.0});
    CHECK(pot.value(0) == 1.0);
    CHECK(pot.value(1) == -1.0);
    CHECK(pot.value(2) == 1.0);
    CHECK(pot.value(-1) == -1.0);
    CHECK(pot.value(-2) == 1.0);
    const PeriodicPotential pot3 = new_potential({1.0, 0.0, -1.0});
    CHECK(pot3.value(-1) == -1.0);
    CHECK(pot3.value(-3) == 1.0);
    CHECK(pot3.value(-4) == -1.0);
    CHECK(pot3.value(5) == -1.0);
}

TEST_CASE("potential constructor guards") {
    CHECK_THROWS_AS(new_potential({1.0}), PeriodTooSmall);
    CHECK_THROWS_AS(new_potential({}), PeriodTooSmall);
    CHECK_THROWS_AS(new_potential({1.0, 1.0}), DegeneratePotential);
    CHECK_THROWS_AS(new_potential({0.0, 1.0, 1.0}), DegeneratePotential);
}

TEST_CASE("gap <= range on random potentials") {
    detail::Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 2 + static_cast<int>(rng.uniform(0.0, 7.0));
        const PeriodicPotential pot = random_potential(rng, p);
        CHECK(pot.gap() <= pot.range());
        CHECK(pot.gap() > 0.0);
    }
}

TEST_CASE("constants ledger, alternating p = 2 potential") {
    // Frozen values: gamma = Gamma = 2, rho0 = 1.2.
    const PeriodicPotential pot = new_potential({1.0, -1.0});
    const ConstantsLedger L = constants(pot);
    CHECK(L.period() == 2);
    CHECK(L.gamma == 2.0);
    CHECK(L.range == 2.0);
    CHECK(L.rho0 == 1.2);
    CHECK(L.C == 37.0); // 2^2 * 3^2 + (3+2)^0, exact in doubles
    CHECK(L.C_hat == Approx(39.816666666666663).epsilon(1e-15));
    CHECK(L.eta0 == Approx(0.18232155679395459).epsilon(1e-15));
    CHECK(L.lambda0 == Approx(0.11206049911782753).epsilon(1e-15));
    CHECK(L.mu0 == Approx(8.9237510797496657).epsilon(1e-15));
    CHECK(L.C2 == Approx(218.38704850279615).epsilon(1e-15));
    CHECK(L.C3 == Approx(50.26548245743669).epsilon(1e-15));
    CHECK(L.gamma0(L.lambda0) == Approx(0.49999999999999989).epsilon(1e-15));
}

TEST_CASE("constants ledger, canonical p = 3 potential") {
    // Frozen values: V = (1, 0, -1), gamma = 1, Gamma = 2, rho0 = 1.2.
    const PeriodicPotential pot = new_potential({1.0, 0.0, -1.0});
    const ConstantsLedger L = constants(pot);
    CHECK(L.C == 129.5); // 2^3 * 2.5^3 + 4.5, exact in doubles
    CHECK(L.C_hat == Approx(132.31666666666666).epsilon(1e-15));
    CHECK(L.lambda0 == Approx(0.021733653203545564).epsilon(1e-15));
    CHECK(L.mu0 == Approx(46.011592742119532).epsilon(1e-15));
    CHECK(L.C2 == Approx(2902.9297246776036).epsilon(1e-15));
    CHECK(L.C3 == Approx(452.38934211693021).epsilon(1e-15));
    CHECK(L.gamma0(L.lambda0) == Approx(0.24999999999999997).epsilon(1e-15));
}

TEST_CASE("constants are invariant under shift and rotation of the potential") {
    const std::vector<double> base = {0.4, -1.1, 2.0, 0.9};
    const ConstantsLedger L0 = constants(new_potential(base));

    std::vector<double> shifted = base;
    for (double& v : shifted) v += 7.25; // gap and range are pairwise differences
    const ConstantsLedger Ls = constants(new_potential(shifted));
    CHECK(Ls.gamma == Approx(L0.gamma).epsilon(1e-13));
    CHECK(Ls.range == Approx(L0.range).epsilon(1e-13));
    CHECK(Ls.lambda0 == Approx(L0.lambda0).epsilon(1e-13));
    CHECK(Ls.C == Approx(L0.C).epsilon(1e-13));

    std::vector<double> rotated = {2.0, 0.9, 0.4, -1.1}; // cyclic rotation by 2
    const ConstantsLedger Lr = constants(new_potential(rotated));
    CHECK(Lr.gamma == L0.gamma);
    CHECK(Lr.range == L0.range);
    CHECK(Lr.lambda0 == L0.lambda0);
    CHECK(Lr.C2 == L0.C2);
    CHECK(Lr.C3 == L0.C3);
}

TEST_CASE("threshold invariants on random potentials") {
    detail::Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 2 + static_cast<int>(rng.uniform(0.0, 7.0));
        const PeriodicPotential pot = random_potential(rng, p);
        const ConstantsLedger L = constants(pot);
        const double gamma = pot.gap();

        // lambda0 <= 1 and mu0 >= 1 by the min{1, ...} clamp.
        CHECK(L.lambda0 <= 1.0);
        CHECK(L.mu0 >= 1.0);
        CHECK(L.lambda0 * L.mu0 == Approx(1.0).epsilon(1e-15));

        // The Rouche radius at threshold equals gamma/4: lambda0^2 C_hat
        // cancels against (gamma/2)^{p-1} exactly up to rounding.
        CHECK(L.gamma0(L.lambda0) == Approx(gamma / 4.0).epsilon(1e-12));
        CHECK(L.gamma0(L.lambda0) <= gamma / 4.0 * (1.0 + 1e-12));
        CHECK(L.gamma0(L.lambda0 / 2.0) < gamma / 4.0);

        // mu0 >= (2/gamma)^{p/2} whenever the threshold branch is active.
        const double scale = std::pow(2.0 / gamma, p / 2.0);
        if (2.0 * L.C_hat * std::pow(2.0 / gamma, p) >= 1.0)
            CHECK(L.mu0 >= scale * (1.0 - 1e-12));

        CHECK(L.C_hat == Approx(L.C + 2.0 * L.rho0 + 1.0 / (2.0 * L.rho0)).epsilon(1e-15));
        CHECK(L.eta0 == Approx(std::log(L.rho0)).epsilon(1e-15));
    }
}

TEST_CASE("lambda0 grows with the gap at fixed range") {
    const ConstantsLedger small = constants(new_potential({0.0, 0.5, 2.0})); // gamma 0.5
    const ConstantsLedger big = constants(new_potential({0.0, 1.0, 2.0}));   // gamma 1.0
    CHECK(small.range == big.range);
    CHECK(small.gamma < big.gamma);
    CHECK(small.lambda0 < big.lambda0);
    CHECK(small.mu0 > big.mu0);
}

TEST_CASE("constants radius guard") {
    const PeriodicPotential pot = new_potential({1.0, -1.0});
    CHECK_THROWS_AS(constants(pot, 1.0), InvalidRadius);
    CHECK_THROWS_AS(constants(pot, 0.5), InvalidRadius);
    CHECK(constants(pot, 1.0 + 1e-9).rho0 > 1.0);
}

TEST_CASE("coupling round trip") {
    const Coupling a = Coupling::from_mu(8.0);
    CHECK(a.lambda == 0.125);
    const Coupling b = Coupling::from_lambda(0.125);
    CHECK(b.mu == 8.0);
    CHECK_THROWS_AS(Coupling::from_mu(0.0), DomainViolation);
    CHECK_THROWS_AS(Coupling::from_mu(-2.0), DomainViolation);
    CHECK_THROWS_AS(Coupling::from_lambda(0.0), DomainViolation);
    CHECK_THROWS_AS(Coupling::from_lambda(-0.1), DomainViolation);
}

TEST_CASE("site index round trip") {
    for (int p = 2; p <= 6; ++p) {
        for (long long j = -7; j <= 7; ++j) {
            for (int m = 1; m <= p; ++m) {
                const long long n = site_index(j, m, p);
                const auto [jj, mm] = block_site(n, p);
                CHECK(jj == j);
                CHECK(mm == m);
            }
        }
    }
    CHECK(site_index(0, 1, 2) == 0);
    CHECK(site_index(1, 1, 2) == 2);
    CHECK(block_site(-1, 2).first == -1);
    CHECK(block_site(-1, 2).second == 2);
    CHECK(block_site(-3, 3).first == -1);
    CHECK(block_site(-3, 3).second == 1);
    CHECK_THROWS_AS(site_index(0, 0, 3), SublatticeOutOfRange);
    CHECK_THROWS_AS(site_index(0, 4, 3), SublatticeOutOfRange);
}

TEST_CASE("coupling rescale") {
    const RescaledCoupling r = rescale_coupling(2.0, 10.0);
    CHECK(r.mu_prime == 5.0);
    CHECK(r.factor == 2.0);
    const RescaledCoupling n = rescale_coupling(-0.5, 10.0);
    CHECK(n.mu_prime == 20.0);
    CHECK(n.factor == 0.5);
    CHECK_THROWS_AS(rescale_coupling(0.0, 10.0), ZeroHopping);
    CHECK_THROWS_AS(rescale_coupling(1.0, 0.0), DomainViolation);
    CHECK_THROWS_AS(rescale_coupling(1.0, -3.0), DomainViolation);
}
