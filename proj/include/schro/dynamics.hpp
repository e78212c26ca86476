#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "schro/detail/bessel.hpp"
#include "schro/detail/parallel.hpp"
#include "schro/errors.hpp"
#include "schro/floquet.hpp"
#include "schro/linalg.hpp"
#include "schro/model.hpp"
#include "schro/quadrature.hpp"

namespace schro {

// One p x p block of e^{-itH_mu} at block offset d = j - k.
struct BlockKernel {
    double t = 0.0;
    int d = 0;
    Mat K;
    int M = 0; // quadrature nodes used
};

namespace detail_dyn {

// Per-node eigendecompositions of A_p(mu, e^{ix}), shared by every (t, d).
inline std::vector<HermitianEig> fiber_eigs(const PeriodicPotential& pot, double mu,
                                            int M, int threads) {
    std::vector<HermitianEig> eigs(static_cast<std::size_t>(M));
    detail::parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t n) {
        const double x = 2.0 * pi * static_cast<double>(n) / static_cast<double>(M);
        eigs[n] = hermitian_eig(build_floquet_x(pot, Coupling::from_mu(mu), x, false));
    });
    return eigs;
}

inline std::vector<Mat> propagators(const std::vector<HermitianEig>& eigs, double t) {
    std::vector<Mat> U(eigs.size());
    if (eigs.empty()) return U;
    const int p = static_cast<int>(eigs[0].values.size());
    // Split e^{-it zeta} into a node-independent anchor phase per sorted index
    // times an oscillatory factor with a small argument. Rounding of the
    // product t*zeta is then coherent across nodes and cancels from kernel
    // norms instead of appearing as a quadrature noise floor at large t.
    Vec anchor(p);
    for (int i = 0; i < p; ++i) anchor[i] = std::exp(cx(0.0, -t * eigs[0].values[i]));
    for (std::size_t n = 0; n < eigs.size(); ++n) {
        Vec phases(p);
        for (int i = 0; i < p; ++i)
            phases[i] = anchor[i] *
                        std::exp(cx(0.0, -t * (eigs[n].values[i] - eigs[0].values[i])));
        U[n] = eigs[n].vectors * phases.asDiagonal() * eigs[n].vectors.adjoint();
    }
    return U;
}

// K(t,d) = (1/M) sum_n U_n e^{-i d x_n} for d = -d_max..d_max.
inline std::vector<BlockKernel> assemble_kernels(const std::vector<Mat>& U, double t,
                                                 int d_max, int M) {
    const int p = static_cast<int>(U.front().rows());
    std::vector<BlockKernel> out;
    out.reserve(static_cast<std::size_t>(2 * d_max + 1));
    for (int d = -d_max; d <= d_max; ++d) {
        BlockKernel bk;
        bk.t = t;
        bk.d = d;
        bk.M = M;
        bk.K = Mat::Zero(p, p);
        for (int n = 0; n < M; ++n) {
            const double x = 2.0 * pi * static_cast<double>(n) / static_cast<double>(M);
            bk.K += U[static_cast<std::size_t>(n)] * std::exp(cx(0.0, -d * x));
        }
        bk.K /= static_cast<double>(M);
        out.push_back(std::move(bk));
    }
    return out;
}

inline double max_entry_diff(const std::vector<BlockKernel>& a,
                             const std::vector<BlockKernel>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, (a[i].K - b[i].K).cwiseAbs().maxCoeff());
    return m;
}

} // namespace detail_dyn

// All blocks K(t,d), |d| <= d_max, by the M-node trapezoid rule. The result is
// ordered d = -d_max..d_max. With check = true the computation is repeated at
// 2M nodes and any entry moving more than tol raises QuadratureUnresolved.
inline std::vector<BlockKernel> block_kernels(const PeriodicPotential& pot, double mu,
                                              double t, int d_max, int M = 512,
                                              bool check = false, double tol = 1e-10,
                                              int threads = 1) {
    if (M < 4 * pot.p() || M % 2 != 0)
        throw DomainViolation("block_kernels: M must be even and >= 4p");
    if (!(mu > 0.0)) throw DomainViolation("block_kernels: mu must be > 0");
    if (d_max < 0) throw DomainViolation("block_kernels: d_max must be >= 0");
    const auto eigs = detail_dyn::fiber_eigs(pot, mu, M, threads);
    const auto U = detail_dyn::propagators(eigs, t);
    auto out = detail_dyn::assemble_kernels(U, t, d_max, M);
    if (check) {
        const auto eigs2 = detail_dyn::fiber_eigs(pot, mu, 2 * M, threads);
        const auto U2 = detail_dyn::propagators(eigs2, t);
        const auto out2 = detail_dyn::assemble_kernels(U2, t, d_max, 2 * M);
        if (detail_dyn::max_entry_diff(out, out2) > tol)
            throw QuadratureUnresolved("block_kernels: doubling M moved entries above tolerance");
    }
    return out;
}

inline BlockKernel block_kernel(const PeriodicPotential& pot, double mu, double t, int d,
                                int M = 512, bool check = false, double tol = 1e-10) {
    auto all = block_kernels(pot, mu, t, std::abs(d), M, check, tol);
    return all[static_cast<std::size_t>(d + std::abs(d))];
}

// Kernels for several times with the per-node eigendecompositions computed
// once and shared. Result: one vector of blocks (d = -d_max..d_max) per time.
inline std::vector<std::vector<BlockKernel>> block_kernel_sequence(
    const PeriodicPotential& pot, double mu, const std::vector<double>& ts, int d_max,
    int M = 512, int threads = 1) {
    if (M < 4 * pot.p() || M % 2 != 0)
        throw DomainViolation("block_kernel_sequence: M must be even and >= 4p");
    const auto eigs = detail_dyn::fiber_eigs(pot, mu, M, threads);
    std::vector<std::vector<BlockKernel>> out;
    out.reserve(ts.size());
    for (double t : ts) {
        const auto U = detail_dyn::propagators(eigs, t);
        out.push_back(detail_dyn::assemble_kernels(U, t, d_max, M));
    }
    return out;
}

// Closed-form p = 2 kernel for the alternating potential V = (1, -1). Entries
// are assembled from Fourier coefficients of f^{pm}(x) = e^{pm i t w(x)} and
// g^{pm}(x) = mu e^{pm i t w(x)} / w(x), w(x) = sqrt(mu^2 + 2 + 2 cos x):
//   K11(d) = (fhat^- + fhat^+)(d)/2 + (ghat^- - ghat^+)(d)/2
//   K12(d) = [(ghat^- - ghat^+)(d) + (ghat^- - ghat^+)(d-1)] / (2 mu)
//   K22(d) = conj(K11(-d)),  K21(d) = -conj(K12(-d))
// Each coefficient is resolved by trapezoid doubling to the requested
// absolute tolerance.
inline BlockKernel block_kernel_p2_closed(double mu, double t, int d,
                                          double tol = 1e-12) {
    if (!(mu >= 1.0))
        throw DomainViolation("block_kernel_p2_closed: requires mu >= 1");
    auto omega = [&](double x) { return std::sqrt(mu * mu + 2.0 + 2.0 * std::cos(x)); };
    auto fhat = [&](int sign, int dd) {
        return periodic_mean_adaptive(
            [&](double x) {
                return std::exp(cx(0.0, sign * t * omega(x))) * std::exp(cx(0.0, -dd * x));
            },
            1024, tol);
    };
    auto hhat = [&](int dd) { // (ghat^- - ghat^+)(dd)
        return periodic_mean_adaptive(
            [&](double x) {
                const double w = omega(x);
                const cx gm = mu * std::exp(cx(0.0, -t * w)) / w;
                const cx gp = mu * std::exp(cx(0.0, +t * w)) / w;
                return (gm - gp) * std::exp(cx(0.0, -dd * x));
            },
            1024, tol);
    };
    auto k11 = [&](int dd) {
        return 0.5 * (fhat(-1, dd) + fhat(+1, dd)) + 0.5 * hhat(dd);
    };
    auto k12 = [&](int dd) { return (hhat(dd) + hhat(dd - 1)) / (2.0 * mu); };

    BlockKernel bk;
    bk.t = t;
    bk.d = d;
    bk.M = 0; // adaptive
    bk.K = Mat::Zero(2, 2);
    bk.K(0, 0) = k11(d);
    bk.K(0, 1) = k12(d);
    bk.K(1, 1) = std::conj(k11(-d));
    bk.K(1, 0) = -std::conj(k12(-d));
    return bk;
}

// State on the truncated lattice {-half..half}; amp[n + half] is the
// amplitude at site n.
struct LatticeState {
    int half = 0;
    std::vector<cx> amp;

    LatticeState() = default;
    explicit LatticeState(int h)
        : half(h), amp(static_cast<std::size_t>(2 * h + 1), cx(0.0)) {}

    int total() const { return 2 * half + 1; }
    cx& at(int n) { return amp[static_cast<std::size_t>(n + half)]; }
    cx at(int n) const { return amp[static_cast<std::size_t>(n + half)]; }
    double norm() const {
        double s = 0.0;
        for (const cx& a : amp) s += std::norm(a);
        return std::sqrt(s);
    }
    void normalize() {
        const double s = norm();
        if (s > 0.0)
            for (cx& a : amp) a /= s;
    }
};

// delta_0: site n = 0, i.e. block j = 0, sublattice m = 1.
inline LatticeState delta_state(int half) {
    LatticeState psi(half);
    psi.at(0) = cx(1.0);
    return psi;
}

// H = hopping * Laplacian + mu V on sites -half..half with open ends. The
// diagonal at site n carries mu V_{(n mod p) + 1}.
struct TruncatedHamiltonian {
    std::vector<double> diag;
    std::vector<double> off; // size total - 1
    int half = 0;

    int total() const { return 2 * half + 1; }

    void apply(const std::vector<cx>& in, std::vector<cx>& out) const {
        const std::size_t n = in.size();
        for (std::size_t i = 0; i < n; ++i) {
            cx v = diag[i] * in[i];
            if (i > 0) v += off[i - 1] * in[i - 1];
            if (i + 1 < n) v += off[i] * in[i + 1];
            out[i] = v;
        }
    }
};

inline TruncatedHamiltonian truncated_hamiltonian(const PeriodicPotential& pot, double mu,
                                                  int half, double hopping = 1.0) {
    if (half < 1) throw DomainViolation("truncated_hamiltonian: half-width must be >= 1");
    TruncatedHamiltonian H;
    H.half = half;
    const int N = 2 * half + 1;
    H.diag.resize(static_cast<std::size_t>(N));
    H.off.assign(static_cast<std::size_t>(N - 1), hopping);
    for (int i = 0; i < N; ++i)
        H.diag[static_cast<std::size_t>(i)] = mu * pot.value(i - half);
    return H;
}

namespace detail_dyn {

inline void check_spill(const LatticeState& psi) {
    const int edge = std::min(5, psi.half);
    double worst = 0.0;
    for (int k = 0; k < edge; ++k) {
        worst = std::max(worst, std::abs(psi.at(-psi.half + k)));
        worst = std::max(worst, std::abs(psi.at(psi.half - k)));
    }
    if (worst > 1e-8)
        throw BoundarySpill("evolve: amplitude " + std::to_string(worst) +
                            " within 5 sites of the boundary");
}

// One Chebyshev step psi <- e^{-i tau H} psi with H = a Htilde + b. The
// expansion order is cut where the coefficient tail drops below 1e-14, which
// bounds the per-step error by the same amount.
inline void chebyshev_step(const TruncatedHamiltonian& H, double a, double b, double tau,
                           std::vector<cx>& psi, std::vector<cx>& w0,
                           std::vector<cx>& w1, std::vector<cx>& w2) {
    const double atau = a * tau;
    const int kmax = static_cast<int>(std::ceil(
        atau + 12.0 * std::cbrt(std::max(atau, 1.0)) + 50.0));
    const std::vector<double> J = detail::bessel_j_array(atau, kmax);
    int K = kmax;
    double tail = 0.0;
    while (K > 1 && tail + std::abs(J[static_cast<std::size_t>(K)]) < 5e-15) {
        tail += std::abs(J[static_cast<std::size_t>(K)]);
        --K;
    }

    const std::size_t n = psi.size();
    auto apply_scaled = [&](const std::vector<cx>& in, std::vector<cx>& out) {
        H.apply(in, out);
        for (std::size_t i = 0; i < n; ++i) out[i] = (out[i] - b * in[i]) / a;
    };

    // w0 = T_0 psi, w1 = T_1 psi; acc accumulates sum c_k T_k psi in psi.
    w0 = psi;
    apply_scaled(w0, w1);
    const cx mi(0.0, -1.0);
    cx ck = 2.0 * mi * J[1];
    for (std::size_t i = 0; i < n; ++i) psi[i] = J[0] * w0[i] + ck * w1[i];
    cx ipow = mi;
    for (int k = 2; k <= K; ++k) {
        apply_scaled(w1, w2);
        for (std::size_t i = 0; i < n; ++i) w2[i] = 2.0 * w2[i] - w0[i];
        ipow *= mi;
        ck = 2.0 * ipow * J[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < n; ++i) psi[i] += ck * w2[i];
        std::swap(w0, w1);
        std::swap(w1, w2);
    }
    const cx phase = std::exp(cx(0.0, -b * tau));
    for (std::size_t i = 0; i < n; ++i) psi[i] *= phase;
}

} // namespace detail_dyn

// psi(t) = e^{-itH} psi0 on the truncated lattice. method "chebyshev" steps
// the Chebyshev expansion of the rescaled Hamiltonian; method "eig"
// diagonalizes the tridiagonal matrix (implicit-shift QL), guarded to 4001
// sites. The spectral rescale is centered: a = mu (Vmax - Vmin)/2 +
// 2|hopping| + pad, b = mu (Vmax + Vmin)/2, which keeps the Chebyshev order
// proportional to the spectral half-width actually present.
inline LatticeState evolve(const PeriodicPotential& pot, double mu,
                           const LatticeState& psi0, double t,
                           const std::string& method = "chebyshev",
                           double hopping = 1.0) {
    if (t < 0.0) throw DomainViolation("evolve: t must be >= 0");
    const TruncatedHamiltonian H = truncated_hamiltonian(pot, mu, psi0.half, hopping);
    LatticeState psi = psi0;
    if (t == 0.0) return psi;

    if (method == "chebyshev") {
        const double hw = mu * (pot.max_value() - pot.min_value()) / 2.0 +
                          2.0 * std::abs(hopping);
        const double a = hw * (1.0 + 1e-3) + 1e-12;
        const double b = mu * (pot.max_value() + pot.min_value()) / 2.0;
        const int n_steps = std::max(1, static_cast<int>(std::ceil(a * t / 150.0)));
        const double tau = t / static_cast<double>(n_steps);
        std::vector<cx> w0(psi.amp.size()), w1(psi.amp.size()), w2(psi.amp.size());
        for (int s = 0; s < n_steps; ++s) {
            detail_dyn::chebyshev_step(H, a, b, tau, psi.amp, w0, w1, w2);
            detail_dyn::check_spill(psi);
        }
        return psi;
    }
    if (method == "eig") {
        if (psi0.total() > 4001)
            throw MethodUnavailable("evolve: eig method limited to 4001 sites");
        const TridiagEig eig = tridiag_eig_ql(H.diag, H.off);
        const int N = psi0.total();
        std::vector<cx> coef(static_cast<std::size_t>(N), cx(0.0));
        for (int k = 0; k < N; ++k) {
            cx c(0.0);
            for (int i = 0; i < N; ++i)
                c += eig.vectors(i, k) * psi0.amp[static_cast<std::size_t>(i)];
            coef[static_cast<std::size_t>(k)] = c * std::exp(cx(0.0, -t * eig.values[k]));
        }
        for (int i = 0; i < N; ++i) {
            cx v(0.0);
            for (int k = 0; k < N; ++k)
                v += eig.vectors(i, k) * coef[static_cast<std::size_t>(k)];
            psi.amp[static_cast<std::size_t>(i)] = v;
        }
        detail_dyn::check_spill(psi);
        return psi;
    }
    throw MethodUnavailable("evolve: unknown method '" + method + "'");
}

// Moments of the position operator X |e_{m,j}> = |j| |e_{m,j}| (block index
// magnitude, sublattice-blind), with site-index variants for unit comparison.
struct Moments {
    double mass = 0.0;
    double mean_block = 0.0;   // <X>
    double second_block = 0.0; // <X^2>
    double rms_block = 0.0;
    double mean_site = 0.0;
    double second_site = 0.0;
    double rms_site = 0.0;
};

inline Moments position_moments(const LatticeState& psi, int p) {
    Moments m;
    for (int n = -psi.half; n <= psi.half; ++n) {
        const double w = std::norm(psi.at(n));
        if (w == 0.0) continue;
        const long j = block_site(n, p).first;
        const double aj = std::abs(static_cast<double>(j));
        const double an = std::abs(static_cast<double>(n));
        m.mass += w;
        m.mean_block += aj * w;
        m.second_block += aj * aj * w;
        m.mean_site += an * w;
        m.second_site += an * an * w;
    }
    if (m.mass > 0.0) {
        m.mean_block /= m.mass;
        m.second_block /= m.mass;
        m.mean_site /= m.mass;
        m.second_site /= m.mass;
    }
    m.rms_block = std::sqrt(m.second_block);
    m.rms_site = std::sqrt(m.second_site);
    return m;
}

// || sum_{|d| <= d_max} K(t,d) K(t,d)^dagger - I || (operator norm).
inline double unitarity_defect(const std::vector<BlockKernel>& kernels) {
    const int p = static_cast<int>(kernels.front().K.rows());
    Mat S = Mat::Zero(p, p);
    for (const auto& bk : kernels) S += bk.K * bk.K.adjoint();
    S -= Mat::Identity(p, p);
    return operator_norm(S);
}

inline double unitarity_defect(const PeriodicPotential& pot, double mu, double t,
                               int d_max, int M = 512, int threads = 1) {
    return unitarity_defect(block_kernels(pot, mu, t, d_max, M, false, 1e-10, threads));
}

// Mass-like tail sum_{|d| > v|t|} ||K(t,d)||_F^2.
inline double tail_mass(const std::vector<BlockKernel>& kernels, double v) {
    double s = 0.0;
    for (const auto& bk : kernels)
        if (std::abs(static_cast<double>(bk.d)) > v * std::abs(bk.t))
            s += bk.K.squaredNorm();
    return s;
}

} // namespace schro
