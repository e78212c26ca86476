#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace schro::detail {

// J_0(x)..J_K(x) by Miller's downward recurrence, normalized with
// J_0 + 2 sum_{k even} J_k = 1. Relative accuracy ~1e-15 for the orders that
// matter; orders deep in the exponential tail are returned as tiny numbers.
inline std::vector<double> bessel_j_array(double x, int K) {
    std::vector<double> J(static_cast<std::size_t>(K) + 1, 0.0);
    if (x == 0.0) {
        J[0] = 1.0;
        return J;
    }
    const double ax = std::abs(x);
    const int start = K + 20 + static_cast<int>(std::sqrt(40.0 * static_cast<double>(K + 1)) + ax);
    double fkp1 = 0.0;
    double fk = 1e-300;
    double sum = 0.0; // accumulates f_0 + 2 sum_{even k >= 2} f_k
    for (int k = start; k >= 1; --k) {
        const double fkm1 = (2.0 * static_cast<double>(k) / ax) * fk - fkp1;
        fkp1 = fk;
        fk = fkm1;
        if (k - 1 <= K) J[static_cast<std::size_t>(k - 1)] = fk;
        if (((k - 1) & 1) == 0) sum += (k - 1 == 0) ? fk : 2.0 * fk;
        if (std::abs(fk) > 1e250) {
            fk *= 1e-250;
            fkp1 *= 1e-250;
            sum *= 1e-250;
            for (auto& v : J) v *= 1e-250;
        }
    }
    for (auto& v : J) v /= sum;
    if (x < 0.0)
        for (int k = 1; k <= K; k += 2) J[static_cast<std::size_t>(k)] = -J[static_cast<std::size_t>(k)];
    return J;
}

} // namespace schro::detail
