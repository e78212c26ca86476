#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "schro/errors.hpp"

namespace schro {

// p-periodic on-site potential V_1..V_p with its gap and range.
//
// gap   = min |V_j - V_k| over 0 < |j-k| < p   (> 0, non-degeneracy)
// range = max |V_j - V_k| over the same pairs  (>= gap)
//
// Indices are periodic: value(n) = V_{n mod p} with positive representative.
class PeriodicPotential {
public:
    int p() const { return static_cast<int>(v_.size()); }
    const std::vector<double>& values() const { return v_; }
    double gap() const { return gap_; }
    double range() const { return range_; }

    // V at 1-based sublattice index m in 1..p
    double at(int m) const { return v_[static_cast<std::size_t>(m - 1)]; }

    // V_n for any integer site n (periodic extension)
    double value(long long n) const {
        const int p_ = p();
        long long r = n % p_;
        if (r < 0) r += p_;
        return v_[static_cast<std::size_t>(r)];
    }

    double min_value() const { return min_; }
    double max_value() const { return max_; }

    friend PeriodicPotential new_potential(std::vector<double> values);

private:
    std::vector<double> v_;
    double gap_ = 0.0, range_ = 0.0, min_ = 0.0, max_ = 0.0;
};

inline PeriodicPotential new_potential(std::vector<double> values) {
    if (values.size() < 2)
        throw PeriodTooSmall("potential needs period p >= 2, got p = " +
                             std::to_string(values.size()));
    PeriodicPotential pot;
    pot.v_ = std::move(values);
    const int p = pot.p();
    double gap = -1.0, range = 0.0;
    for (int j = 0; j < p; ++j) {
        for (int k = j + 1; k < p; ++k) {
            const double d = std::abs(pot.v_[j] - pot.v_[k]);
            if (gap < 0.0 || d < gap) gap = d;
            if (d > range) range = d;
        }
    }
    if (gap <= 0.0)
        throw DegeneratePotential("two potential values coincide (gap = 0)");
    pot.gap_ = gap;
    pot.range_ = range;
    pot.min_ = pot.v_[0];
    pot.max_ = pot.v_[0];
    for (double x : pot.v_) {
        if (x < pot.min_) pot.min_ = x;
        if (x > pot.max_) pot.max_ = x;
    }
    return pot;
}

// Coupling strength mu > 0 of H_mu = Delta + mu V, with lambda = 1/mu.
struct Coupling {
    double mu;
    double lambda;

    static Coupling from_mu(double mu) {
        if (!(mu > 0.0)) throw DomainViolation("coupling mu must be > 0");
        return {mu, 1.0 / mu};
    }
    static Coupling from_lambda(double lambda) {
        if (!(lambda > 0.0)) throw DomainViolation("coupling lambda must be > 0");
        return {1.0 / lambda, lambda};
    }
};

// Every closed-form constant of the theorems, evaluated for one potential and
// one contour radius rho0 > 1.
struct ConstantsLedger {
    double rho0;    // contour radius
    double eta0;    // ln rho0, spatial decay rate
    double C;       // bound on h_p: 2^p (Gamma + gamma/2)^p + (Gamma + gamma/2 + 2)^(p-2)
    double C_hat;   // C + 2 rho0 + 1/(2 rho0)
    double lambda0; // validity threshold, lambda0^2 = min{1, (gamma/2)^p / (2 C_hat)}
    double mu0;     // 1 / lambda0
    double C2;      // light-cone velocity constant, C_hat / (eta0 (gamma/2)^(p-1))
    double C3;      // asymptotic velocity constant, 4 pi p^2 (2/gamma)^(p-1)
    double gamma;   // copied from the potential for convenience
    double range;

    // Rouche disk radius at coupling lambda; <= gamma/4 for lambda <= lambda0.
    double gamma0(double lambda) const {
        const double half = gamma / 2.0;
        return lambda * lambda * C_hat / std::pow(half, p_ - 1);
    }

    int period() const { return p_; }

    friend ConstantsLedger constants(const PeriodicPotential&, double);

private:
    int p_ = 0;
};

inline ConstantsLedger constants(const PeriodicPotential& pot, double rho0 = 1.2) {
    if (!(rho0 > 1.0))
        throw InvalidRadius("contour radius rho0 must be > 1");
    const int p = pot.p();
    const double gamma = pot.gap();
    const double Gamma = pot.range();
    ConstantsLedger L;
    L.p_ = p;
    L.rho0 = rho0;
    L.eta0 = std::log(rho0);
    L.gamma = gamma;
    L.range = Gamma;
    const double s = Gamma + gamma / 2.0;
    L.C = std::pow(2.0, p) * std::pow(s, p) + std::pow(s + 2.0, p - 2);
    L.C_hat = L.C + 2.0 * rho0 + 1.0 / (2.0 * rho0);
    const double half = gamma / 2.0;
    const double l0sq = std::min(1.0, std::pow(half, p) / (2.0 * L.C_hat));
    L.lambda0 = std::sqrt(l0sq);
    L.mu0 = 1.0 / L.lambda0;
    L.C2 = L.C_hat / (L.eta0 * std::pow(half, p - 1));
    const double pi = 3.14159265358979323846;
    L.C3 = 4.0 * pi * static_cast<double>(p) * static_cast<double>(p) *
           std::pow(2.0 / gamma, p - 1);
    return L;
}

// Basis ordering: site n = p*j + (m-1) for block j in Z and sublattice m in 1..p.
inline long long site_index(long long j, int m, int p) {
    if (m < 1 || m > p)
        throw SublatticeOutOfRange("sublattice index m must lie in 1..p");
    return static_cast<long long>(p) * j + (m - 1);
}

// Inverse of site_index: n -> (block j, sublattice m).
inline std::pair<long long, int> block_site(long long n, int p) {
    long long j = n / p;
    long long r = n % p;
    if (r < 0) { r += p; j -= 1; }
    return {j, static_cast<int>(r) + 1};
}

// H_{alpha,mu} = alpha * H_{1, mu/alpha}: dynamics at time t equal dynamics of
// H_{1, mu'} at time factor*t. A negative alpha is absorbed by flipping the
// potential sign, so only |alpha| enters.
struct RescaledCoupling {
    double mu_prime;
    double factor;
};

inline RescaledCoupling rescale_coupling(double alpha, double mu) {
    if (alpha == 0.0) throw ZeroHopping("hopping coefficient alpha must be nonzero");
    if (!(mu > 0.0)) throw DomainViolation("coupling mu must be > 0");
    return {mu / std::abs(alpha), std::abs(alpha)};
}

} // namespace schro
