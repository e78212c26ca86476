#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "schro/errors.hpp"

namespace schro::detail {

using cx = std::complex<double>;

// Dense polynomial in ascending coefficient order: c[0] + c[1] x + ...
using Poly = std::vector<cx>;

inline cx poly_eval(const Poly& c, cx x) {
    cx acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
}

inline Poly poly_derivative(const Poly& c) {
    if (c.size() <= 1) return {cx(0.0)};
    Poly d(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i)
        d[i - 1] = c[i] * static_cast<double>(i);
    return d;
}

// (x - r) * q
inline Poly poly_mul_linear(const Poly& q, cx r) {
    Poly out(q.size() + 1, cx(0.0));
    for (std::size_t i = 0; i < q.size(); ++i) {
        out[i + 1] += q[i];
        out[i] -= r * q[i];
    }
    return out;
}

inline Poly poly_add(Poly a, const Poly& b) {
    if (b.size() > a.size()) a.resize(b.size(), cx(0.0));
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

inline Poly poly_scale(Poly a, cx s) {
    for (auto& c : a) c *= s;
    return a;
}

// Aberth-Ehrlich simultaneous root iteration on a monic-or-not polynomial,
// started from caller-provided seeds (one per root). Converges quadratically
// for simple roots; the seeds here always sit inside disjoint Rouche disks.
inline std::vector<cx> aberth_roots(const Poly& c, std::vector<cx> z,
                                    double tol = 1e-14, int max_iter = 200) {
    const std::size_t n = c.size() - 1; // degree
    if (z.size() != n)
        throw LengthMismatch("aberth_roots: seed count must equal the degree");
    const Poly dc = poly_derivative(c);

    double scale = 0.0;
    for (const auto& coef : c) scale = std::max(scale, std::abs(coef));
    if (scale == 0.0) throw RootFindingDivergence("aberth_roots: zero polynomial");

    for (int it = 0; it < max_iter; ++it) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cx fi = poly_eval(c, z[i]);
            const cx dfi = poly_eval(dc, z[i]);
            cx ratio;
            if (std::abs(dfi) > 0.0) {
                ratio = fi / dfi;
            } else {
                // nudge off the critical point
                z[i] += cx(tol, tol);
                worst = 1.0;
                continue;
            }
            cx sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const cx d = z[i] - z[j];
                if (std::abs(d) == 0.0) { sum = 0.0; break; }
                sum += 1.0 / d;
            }
            const cx denom = 1.0 - ratio * sum;
            const cx step = (std::abs(denom) > 0.0) ? ratio / denom : ratio;
            z[i] -= step;
            const double rel = std::abs(step) / std::max(1.0, std::abs(z[i]));
            worst = std::max(worst, rel);
        }
        if (worst < tol) {
            // two Newton polish steps per root
            for (std::size_t i = 0; i < n; ++i) {
                for (int k = 0; k < 2; ++k) {
                    const cx dfi = poly_eval(dc, z[i]);
                    if (std::abs(dfi) == 0.0) break;
                    z[i] -= poly_eval(c, z[i]) / dfi;
                }
            }
            return z;
        }
    }
    throw RootFindingDivergence("aberth_roots: no convergence within iteration cap");
}

} // namespace schro::detail
