#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace schro::detail {

// mt19937_64 is fully specified by the standard; the distributions are not.
// Mapping raw 64-bit draws to doubles by hand keeps output byte-identical
// across toolchains, which the CLI determinism contract requires.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    std::complex<double> complex_box(double lo, double hi) {
        const double re = uniform(lo, hi); // fixed evaluation order
        const double im = uniform(lo, hi);
        return {re, im};
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

} // namespace schro::detail
