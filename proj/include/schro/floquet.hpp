#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "schro/charpoly.hpp"
#include "schro/detail/parallel.hpp"
#include "schro/errors.hpp"
#include "schro/linalg.hpp"
#include "schro/model.hpp"

namespace schro {

inline constexpr double pi = 3.14159265358979323846;

// A~_p(lambda, z): diagonal V_1..V_p, off-diagonals lambda, corners lambda*z
// (top right) and lambda/z (bottom left). Corner terms are added into the
// hopping entries, which reproduces the special p = 2 structure
// [[V1, lambda(1+z)], [lambda(1+1/z), V2]] automatically.
inline Mat floquet_scaled(const PeriodicPotential& pot, double lambda, cx z) {
    if (z == cx(0.0)) throw ZeroCornerParameter("floquet_scaled: z must be nonzero");
    const int p = pot.p();
    Mat A = Mat::Zero(p, p);
    for (int i = 0; i < p; ++i) A(i, i) = pot.at(i + 1);
    for (int i = 0; i + 1 < p; ++i) {
        A(i, i + 1) += lambda;
        A(i + 1, i) += lambda;
    }
    A(0, p - 1) += lambda * z;
    A(p - 1, 0) += lambda / z;
    return A;
}

// A_p(mu, z): diagonal mu V_l, unit hopping, corners z and 1/z. Satisfies
// A_p(mu, z) = mu * A~_p(1/mu, z) exactly.
inline Mat floquet_unscaled(const PeriodicPotential& pot, double mu, cx z) {
    if (z == cx(0.0)) throw ZeroCornerParameter("floquet_unscaled: z must be nonzero");
    const int p = pot.p();
    Mat A = Mat::Zero(p, p);
    for (int i = 0; i < p; ++i) A(i, i) = mu * pot.at(i + 1);
    for (int i = 0; i + 1 < p; ++i) {
        A(i, i + 1) += 1.0;
        A(i + 1, i) += 1.0;
    }
    A(0, p - 1) += z;
    A(p - 1, 0) += 1.0 / z;
    return A;
}

inline Mat build_floquet(const PeriodicPotential& pot, const Coupling& c, cx z,
                         bool scaled) {
    return scaled ? floquet_scaled(pot, c.lambda, z)
                  : floquet_unscaled(pot, c.mu, z);
}

// On the unit circle the corners are built as an exact conjugate pair, so the
// matrix is Hermitian by construction, not merely up to rounding in 1/z.
inline Mat build_floquet_x(const PeriodicPotential& pot, const Coupling& c, double x,
                           bool scaled) {
    const int p = pot.p();
    const double diag_scale = scaled ? 1.0 : c.mu;
    const double hop = scaled ? c.lambda : 1.0;
    Mat A = Mat::Zero(p, p);
    for (int m = 1; m <= p; ++m) A(m - 1, m - 1) = diag_scale * pot.at(m);
    for (int m = 0; m + 1 < p; ++m) {
        A(m, m + 1) += hop;
        A(m + 1, m) += hop;
    }
    const cx corner = hop * std::exp(cx(0.0, x));
    A(0, p - 1) += corner;
    A(p - 1, 0) += std::conj(corner);
    return A;
}

namespace detail_floquet {

// Assign each eigenvalue to the nearest V_l; the assignment must be a
// bijection with every deviation below gamma/4 (guaranteed for lambda <=
// lambda0 by the localization lemma).
template <typename Scalar>
inline std::vector<int> label_by_potential(const PeriodicPotential& pot,
                                           const std::vector<Scalar>& zeta) {
    const int p = pot.p();
    const double quarter = pot.gap() / 4.0;
    std::vector<int> owner(static_cast<std::size_t>(p), -1); // band l -> eigen index
    for (int i = 0; i < p; ++i) {
        int best = -1;
        double bestd = 0.0;
        for (int l = 0; l < p; ++l) {
            const double d = std::abs(zeta[static_cast<std::size_t>(i)] - pot.at(l + 1));
            if (best < 0 || d < bestd) { best = l; bestd = d; }
        }
        if (bestd >= quarter)
            throw AmbiguousLabeling("eigenvalue outside every gamma/4 disk");
        if (owner[static_cast<std::size_t>(best)] >= 0)
            throw AmbiguousLabeling("two eigenvalues claim the same potential value");
        owner[static_cast<std::size_t>(best)] = i;
    }
    std::vector<int> perm(static_cast<std::size_t>(p));
    for (int l = 0; l < p; ++l) perm[static_cast<std::size_t>(l)] = owner[static_cast<std::size_t>(l)];
    return perm; // perm[l] = index of the eigenvalue belonging to band l
}

} // namespace detail_floquet

// Derivative of band l (0-based, labeled by V_{l+1}) at quasimomentum x.
// General p > 2:   dzeta = -2 lambda^p sin(x) / prod_{j != l} (zeta_l - zeta_j)
// p = 2 closed form: |dzeta|^2 = 4 lambda^4 sin^2 x / (gamma^2 + 8 lambda^2 (1 + cos x)),
// sign fixed by -sin(x) times the band sign.
inline double band_derivative(const PeriodicPotential& pot, double lambda, double x,
                              const std::vector<double>& zeta, int l) {
    const int p = pot.p();
    const double tol = 1e-8 * std::max(1.0, pot.range());
    if (p == 2) {
        const double gamma = pot.gap();
        const double denom = gamma * gamma +
                             8.0 * lambda * lambda * (1.0 + std::cos(x));
        if (std::sqrt(denom) < tol)
            throw DegenerateBands("band_derivative: p = 2 bands touch");
        const double mean = (pot.at(1) + pot.at(2)) / 2.0;
        const double sign = (pot.at(l + 1) >= mean) ? 1.0 : -1.0;
        return -std::sin(x) * sign * 2.0 * lambda * lambda / std::sqrt(denom);
    }
    double prod = 1.0;
    for (int j = 0; j < p; ++j) {
        if (j == l) continue;
        const double d = zeta[static_cast<std::size_t>(l)] - zeta[static_cast<std::size_t>(j)];
        if (std::abs(d) < tol)
            throw DegenerateBands("band_derivative: band gap below tolerance");
        prod *= d;
    }
    return -2.0 * std::pow(lambda, p) * std::sin(x) / prod;
}

// Band functions, eigenvectors, and derivatives of the scaled Floquet matrix
// on a uniform grid over [0, 2pi).
struct BandData {
    std::vector<double> x;    // M grid nodes
    Eigen::MatrixXd zeta;     // M x p, column l = band labeled by V_{l+1}
    Eigen::MatrixXd dzeta;    // M x p, analytic derivative
    std::vector<Mat> vectors; // per node, column l = unit eigenvector of band l
    double lambda = 0.0;
    int p = 0;

    Mat projection(int node, int l) const {
        const Vec v = vectors[static_cast<std::size_t>(node)].col(l);
        return v * v.adjoint();
    }
};

inline BandData hermitian_bands(const PeriodicPotential& pot, double lambda, int M = 512,
                                double rho0 = 1.2, int threads = 1) {
    const int p = pot.p();
    if (M < 4 * p)
        throw DomainViolation("hermitian_bands: grid size must satisfy M >= 4p");
    const ConstantsLedger L = constants(pot, rho0);
    if (lambda > L.lambda0 * (1.0 + 1e-12))
        throw CouplingAboveThreshold("hermitian_bands: lambda exceeds lambda0, "
                                     "band labeling undefined");

    BandData bd;
    bd.lambda = lambda;
    bd.p = p;
    bd.x.resize(static_cast<std::size_t>(M));
    bd.zeta.resize(M, p);
    bd.dzeta.resize(M, p);
    bd.vectors.assign(static_cast<std::size_t>(M), Mat());

    std::vector<std::string> failures(static_cast<std::size_t>(M));
    detail::parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t n) {
        const double x = 2.0 * pi * static_cast<double>(n) / static_cast<double>(M);
        bd.x[n] = x;
        try {
            const Mat A = build_floquet_x(pot, Coupling::from_lambda(lambda), x, true);
            const HermitianEig eig = hermitian_eig(A);
            std::vector<double> vals(static_cast<std::size_t>(p));
            for (int i = 0; i < p; ++i) vals[static_cast<std::size_t>(i)] = eig.values[i];
            const std::vector<int> perm = detail_floquet::label_by_potential(pot, vals);
            Mat vecs(p, p);
            std::vector<double> labeled(static_cast<std::size_t>(p));
            for (int l = 0; l < p; ++l) {
                labeled[static_cast<std::size_t>(l)] = vals[static_cast<std::size_t>(perm[static_cast<std::size_t>(l)])];
                vecs.col(l) = eig.vectors.col(perm[static_cast<std::size_t>(l)]);
            }
            for (int l = 0; l < p; ++l) {
                bd.zeta(static_cast<int>(n), l) = labeled[static_cast<std::size_t>(l)];
                bd.dzeta(static_cast<int>(n), l) =
                    band_derivative(pot, lambda, x, labeled, l);
            }
            bd.vectors[n] = std::move(vecs);
        } catch (const Error& err) {
            failures[n] = err.what();
        }
    });
    for (const auto& f : failures)
        if (!f.empty()) throw AmbiguousLabeling("hermitian_bands: " + f);
    return bd;
}

inline double max_abs_derivative(const BandData& bd) {
    double m = 0.0;
    for (int n = 0; n < bd.zeta.rows(); ++n)
        for (int l = 0; l < bd.p; ++l)
            m = std::max(m, std::abs(bd.dzeta(n, l)));
    return m;
}

// Eigenvalues of the (generally non-Hermitian) scaled Floquet matrix for z in
// the annulus 1/(2 rho0) < |z| < 2 rho0, computed as roots of the
// characteristic polynomial by Aberth iteration seeded at V_1..V_p, and
// labeled by nearest V_l. Element l of the result belongs to V_{l+1}.
inline std::vector<cx> annulus_eigenvalues(const PeriodicPotential& pot, double lambda,
                                           cx z, double rho0 = 1.2) {
    const ConstantsLedger L = constants(pot, rho0);
    if (lambda > L.lambda0 * (1.0 + 1e-12))
        throw CouplingAboveThreshold("annulus_eigenvalues: lambda exceeds lambda0");
    const double az = std::abs(z);
    if (!(az > 1.0 / (2.0 * rho0) && az < 2.0 * rho0))
        throw DomainViolation("annulus_eigenvalues: z outside the annulus");

    const Poly F = charpoly_coeffs(pot, lambda, z);
    std::vector<cx> seeds(static_cast<std::size_t>(pot.p()));
    for (int l = 0; l < pot.p(); ++l) seeds[static_cast<std::size_t>(l)] = cx(pot.at(l + 1), 0.0);
    std::vector<cx> roots = detail::aberth_roots(F, seeds);
    // Newton polish on the structured evaluator: drives each root to
    // relative-to-offset machine accuracy, which the expanded-coefficient
    // iteration cannot reach at larger p.
    for (cx& r : roots)
        for (int it = 0; it < 3; ++it) {
            const auto [fv, dv] = charpoly_eval(pot, lambda, z, r);
            if (dv == cx(0.0)) break;
            r -= fv / dv;
        }
    const std::vector<int> perm = detail_floquet::label_by_potential(pot, roots);
    std::vector<cx> labeled(roots.size());
    for (int l = 0; l < pot.p(); ++l)
        labeled[static_cast<std::size_t>(l)] = roots[static_cast<std::size_t>(perm[static_cast<std::size_t>(l)])];
    return labeled;
}

// Central difference with an imaginary step: the band functions are analytic
// in a strip, real on the real axis, so
//   dzeta/dx = [zeta(lambda, e^{ix} e^{-h}) - zeta(lambda, e^{ix} e^{+h})] / (2 i h) + O(h^2),
// evaluated via annulus_eigenvalues at radii e^{-h} and e^{+h}. Unlike a real
// step there is no subtractive cancellation, so derivatives of size ~lambda^p
// stay resolvable in double precision. Returns one derivative per band.
inline std::vector<double> band_derivative_cstep(const PeriodicPotential& pot,
                                                 double lambda, double x,
                                                 double h = 1e-4, double rho0 = 1.2) {
    const cx eix = std::exp(cx(0.0, x));
    const std::vector<cx> plus = annulus_eigenvalues(pot, lambda, eix * std::exp(-h), rho0);
    const std::vector<cx> minus = annulus_eigenvalues(pot, lambda, eix * std::exp(+h), rho0);
    std::vector<double> d(plus.size());
    for (std::size_t l = 0; l < plus.size(); ++l) {
        const cx diff = (plus[l] - minus[l]) / cx(0.0, 2.0 * h);
        d[l] = diff.real();
    }
    return d;
}

// Plain real-step central difference of the Hermitian eigenvalues. Accuracy is
// limited by the eigensolver noise floor (~1e-15/h absolute), which is fine
// when the derivative scale is large compared to that.
inline std::vector<double> band_derivative_fd(const PeriodicPotential& pot,
                                              double lambda, double x, double h = 1e-5) {
    auto labeled = [&](double xx) {
        const Mat A = build_floquet_x(pot, Coupling::from_lambda(lambda), xx, true);
        const HermitianEig eig = hermitian_eig(A);
        std::vector<double> vals(static_cast<std::size_t>(pot.p()));
        for (int i = 0; i < pot.p(); ++i) vals[static_cast<std::size_t>(i)] = eig.values[i];
        const std::vector<int> perm = detail_floquet::label_by_potential(pot, vals);
        std::vector<double> out(vals.size());
        for (int l = 0; l < pot.p(); ++l)
            out[static_cast<std::size_t>(l)] = vals[static_cast<std::size_t>(perm[static_cast<std::size_t>(l)])];
        return out;
    };
    const std::vector<double> up = labeled(x + h);
    const std::vector<double> down = labeled(x - h);
    std::vector<double> d(up.size());
    for (std::size_t l = 0; l < up.size(); ++l) d[l] = (up[l] - down[l]) / (2.0 * h);
    return d;
}

struct LocalizationEntry {
    cx z;
    int band;        // 0-based, labeled by V_{band+1}
    cx zeta;
    double deviation; // |zeta - V|
    double im_part;   // |Im zeta|
    bool pass;
};

struct LocalizationReport {
    std::vector<LocalizationEntry> entries;
    double budget;      // gamma0(lambda) = lambda^2 C_hat / (gamma/2)^{p-1}
    double quarter_gap; // gamma / 4
    double worst_ratio; // max deviation / budget
    bool pass;
};

// Samples z on both circles |z| = rho0 and |z| = 1/rho0 and checks the
// localization bounds |zeta_l - V_l| <= gamma0(lambda) < gamma/4 and
// |Im zeta_l| <= gamma0(lambda).
inline LocalizationReport verify_localization(const PeriodicPotential& pot,
                                              double lambda, int n_samples = 64,
                                              double rho0 = 1.2) {
    const ConstantsLedger L = constants(pot, rho0);
    LocalizationReport rep;
    rep.budget = L.gamma0(lambda);
    rep.quarter_gap = pot.gap() / 4.0;
    rep.worst_ratio = 0.0;
    rep.pass = true;

    const std::array<double, 2> radii = {rho0, 1.0 / rho0};
    for (double r : radii) {
        for (int k = 0; k < n_samples; ++k) {
            const double phi = 2.0 * pi * static_cast<double>(k) / static_cast<double>(n_samples);
            const cx z = r * std::exp(cx(0.0, phi));
            const std::vector<cx> zs = annulus_eigenvalues(pot, lambda, z, rho0);
            for (int l = 0; l < pot.p(); ++l) {
                LocalizationEntry e;
                e.z = z;
                e.band = l;
                e.zeta = zs[static_cast<std::size_t>(l)];
                e.deviation = std::abs(e.zeta - pot.at(l + 1));
                e.im_part = std::abs(e.zeta.imag());
                e.pass = e.deviation <= rep.budget && e.deviation < rep.quarter_gap &&
                         e.im_part <= rep.budget;
                if (!e.pass) rep.pass = false;
                if (rep.budget > 0.0)
                    rep.worst_ratio = std::max(rep.worst_ratio, e.deviation / rep.budget);
                rep.entries.push_back(e);
            }
        }
    }
    return rep;
}

// Spectrum of the alternating p = 2 operator: two symmetric bands.
struct SpectrumP2 {
    std::array<std::pair<double, double>, 2> intervals;
    double measure;
};

inline SpectrumP2 spectrum_p2(double mu) {
    if (!(mu > 0.0)) throw DomainViolation("spectrum_p2: mu must be > 0");
    const double top = std::sqrt(mu * mu + 4.0);
    SpectrumP2 s;
    s.intervals[0] = {-top, -mu};
    s.intervals[1] = {mu, top};
    s.measure = 2.0 * (top - mu);
    return s;
}

} // namespace schro
