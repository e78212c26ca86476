#pragma once

// Quad-precision (__float128) imaginary-step band-derivative oracle. At p = 5,
// lambda = lambda0/2 the derivative scale is ~ 2 lambda^5 ~ 1e-18, far below
// the coefficient scale of the characteristic polynomial, so the oracle must
// not lose the signal to rounding in O(1) intermediates. The 113-bit path
// keeps a wide margin regardless of period; measured error is pure h^2/6
// truncation (~1.7e-9 relative at h = 1e-4) at every tested p. Only the
// oracle runs in quad precision; the formulas under test stay in double.

#include <quadmath.h>

#include <cmath>
#include <vector>

#include "schro/errors.hpp"
#include "schro/floquet.hpp"
#include "schro/model.hpp"

namespace schro {

namespace detail_hp {

struct qcx {
    __float128 re = 0;
    __float128 im = 0;
};

inline qcx make(double re, double im = 0.0) { return {static_cast<__float128>(re), static_cast<__float128>(im)}; }
inline qcx operator+(qcx a, qcx b) { return {a.re + b.re, a.im + b.im}; }
inline qcx operator-(qcx a, qcx b) { return {a.re - b.re, a.im - b.im}; }
inline qcx operator*(qcx a, qcx b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline qcx operator*(__float128 s, qcx a) { return {s * a.re, s * a.im}; }
inline qcx operator/(qcx a, qcx b) {
    const __float128 den = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}
inline __float128 qabs2(qcx a) { return a.re * a.re + a.im * a.im; }

// F(zeta) = D_p - lambda^2 E_{p-2} - lambda^p (z + 1/z) and F'(zeta), by the
// tridiagonal recurrences evaluated pointwise in quad precision.
inline void charpoly_eval_q(const PeriodicPotential& pot, __float128 lambda, qcx z,
                            qcx zeta, qcx& F, qcx& dF) {
    const int p = pot.p();
    const __float128 l2 = lambda * lambda;
    auto tridiag = [&](int first, int count, qcx& val, qcx& der) {
        qcx dm2 = make(1.0), dm1 = make(1.0);
        qcx gm2 = make(0.0), gm1 = make(0.0);
        for (int k = 0; k < count; ++k) {
            const qcx lin = zeta - make(pot.at(first + k));
            qcx dk = lin * dm1;
            qcx gk = dm1 + lin * gm1;
            if (k >= 1) {
                dk = dk - l2 * dm2;
                gk = gk - l2 * gm2;
            }
            dm2 = dm1; dm1 = dk;
            gm2 = gm1; gm1 = gk;
        }
        val = dm1;
        der = gm1;
    };
    qcx D, dD, E, dE;
    tridiag(1, p, D, dD);
    tridiag(2, p - 2, E, dE);
    __float128 lp = 1;
    for (int i = 0; i < p; ++i) lp *= lambda;
    const qcx corner = lp * (z + make(1.0) / z);
    F = D - l2 * E - corner;
    dF = dD - l2 * dE;
}

inline qcx newton_root_q(const PeriodicPotential& pot, __float128 lambda, qcx z,
                         qcx seed) {
    qcx zeta = seed;
    const __float128 tol = static_cast<__float128>(1e-32);
    for (int it = 0; it < 60; ++it) {
        qcx F, dF;
        charpoly_eval_q(pot, lambda, z, zeta, F, dF);
        if (qabs2(dF) == 0) throw RootFindingDivergence("newton_root_q: F' vanished");
        const qcx step = F / dF;
        zeta = zeta - step;
        if (qabs2(step) < tol * tol * (1 + qabs2(zeta))) return zeta;
    }
    throw RootFindingDivergence("newton_root_q: no convergence in 60 iterations");
}

} // namespace detail_hp

// Central difference with imaginary step, all root-finding in __float128:
//   dzeta/dx = [zeta(e^{ix} e^{-h}) - zeta(e^{ix} e^{+h})] / (2 i h) + O(h^2).
// Seeds come from the double-precision annulus solve, so labeling is
// inherited from there. Returns one derivative per band (index l <-> V_{l+1}).
inline std::vector<double> band_derivative_cstep_hp(const PeriodicPotential& pot,
                                                    double lambda, double x,
                                                    double h = 1e-4,
                                                    double rho0 = 1.2) {
    using detail_hp::qcx;
    const cx eix = std::exp(cx(0.0, x));
    const std::vector<cx> seed_p = annulus_eigenvalues(pot, lambda, eix * std::exp(-h), rho0);
    const std::vector<cx> seed_m = annulus_eigenvalues(pot, lambda, eix * std::exp(+h), rho0);

    const __float128 ql = static_cast<__float128>(lambda);
    const __float128 qx = static_cast<__float128>(x);
    const __float128 qh = static_cast<__float128>(h);
    const __float128 cp = cosq(qx), sp = sinq(qx);
    const __float128 rm = expq(-qh), rp = expq(qh);
    const qcx zp = {cp * rm, sp * rm}; // e^{ix} e^{-h}
    const qcx zm = {cp * rp, sp * rp}; // e^{ix} e^{+h}

    std::vector<double> out(seed_p.size());
    for (std::size_t l = 0; l < seed_p.size(); ++l) {
        const qcx rootp = detail_hp::newton_root_q(
            pot, ql, zp, detail_hp::make(seed_p[l].real(), seed_p[l].imag()));
        const qcx rootm = detail_hp::newton_root_q(
            pot, ql, zm, detail_hp::make(seed_m[l].real(), seed_m[l].imag()));
        // (rootp - rootm) / (2 i h): the real part of the derivative is
        // Im(rootp - rootm) / (2h).
        const qcx diff = rootp - rootm;
        out[l] = static_cast<double>(diff.im / (2 * qh));
    }
    return out;
}

} // namespace schro
