#pragma once

#include <cmath>
#include <complex>
#include <cstddef>

#include "schro/errors.hpp"

namespace schro {

// Trapezoid rule for 2pi-periodic integrands: (1/2pi) * integral over [0, 2pi).
// On a periodic smooth integrand the equal-weight rule converges spectrally,
// so it doubles as a DFT when the integrand carries an e^{-i d x} factor.
template <typename Fn>
auto periodic_mean(Fn&& f, int M) -> decltype(f(0.0)) {
    using R = decltype(f(0.0));
    const double pi = 3.14159265358979323846;
    R acc{};
    for (int n = 0; n < M; ++n) {
        const double x = 2.0 * pi * static_cast<double>(n) / static_cast<double>(M);
        acc += f(x);
    }
    return acc * (1.0 / static_cast<double>(M));
}

// Doubles M until the result moves by less than tol (absolute), starting from
// M0 nodes. Throws QuadratureUnresolved if the cap is reached while still
// moving.
template <typename Fn>
auto periodic_mean_adaptive(Fn&& f, int M0, double tol, int M_cap = (1 << 20))
    -> decltype(f(0.0)) {
    auto prev = periodic_mean(f, M0);
    for (int M = 2 * M0; M <= M_cap; M *= 2) {
        auto next = periodic_mean(f, M);
        if (std::abs(next - prev) <= tol) return next;
        prev = next;
    }
    throw QuadratureUnresolved("periodic_mean_adaptive: node cap reached");
}

} // namespace schro
