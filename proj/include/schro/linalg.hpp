#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "schro/errors.hpp"

namespace schro {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct HermitianEig {
    Eigen::VectorXd values; // ascending
    Mat vectors;            // unitary, columns are eigenvectors
};

// Cyclic complex Jacobi eigensolver for Hermitian matrices. Unconditionally
// stable and dependency-free; the matrices here are p x p with p <= 32, where
// a handful of sweeps reaches machine precision.
inline HermitianEig hermitian_eig(const Mat& A_in) {
    const int n = static_cast<int>(A_in.rows());
    Mat A = A_in;
    Mat V = Mat::Identity(n, n);

    const double fro = A.norm();
    const double tol = 1e-15 * std::max(1.0, fro);

    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += std::norm(A(p, q));
        if (std::sqrt(off) <= tol) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const std::complex<double> apq = A(p, q);
                const double g = std::abs(apq);
                if (g <= 1e-18 * std::max(1.0, fro)) continue;
                const std::complex<double> phase = apq / g; // e^{i phi}
                const double app = A(p, p).real();
                const double aqq = A(q, q).real();
                const double tau = (aqq - app) / (2.0 * g);
                double t;
                if (std::abs(tau) > 1e150) {
                    t = 1.0 / (2.0 * tau);
                } else {
                    const double sgn = (tau >= 0.0) ? 1.0 : -1.0;
                    t = sgn / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // rows/columns p and q of A <- J^dagger A J
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const std::complex<double> akp = A(k, p);
                    const std::complex<double> akq = A(k, q);
                    A(k, p) = c * akp - s * std::conj(phase) * akq;
                    A(k, q) = s * phase * akp + c * akq;
                    A(p, k) = std::conj(A(k, p));
                    A(q, k) = std::conj(A(k, q));
                }
                A(p, p) = app * c * c + aqq * s * s - 2.0 * s * c * g;
                A(q, q) = app * s * s + aqq * c * c + 2.0 * s * c * g;
                A(p, q) = 0.0;
                A(q, p) = 0.0;

                for (int k = 0; k < n; ++k) {
                    const std::complex<double> vkp = V(k, p);
                    const std::complex<double> vkq = V(k, q);
                    V(k, p) = c * vkp - s * std::conj(phase) * vkq;
                    V(k, q) = s * phase * vkp + c * vkq;
                }
            }
        }
    }

    HermitianEig out;
    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = A(i, i).real();

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return out.values[a] < out.values[b]; });
    Eigen::VectorXd vals(n);
    Mat vecs(n, n);
    for (int i = 0; i < n; ++i) {
        vals[i] = out.values[order[i]];
        vecs.col(i) = V.col(order[i]);
    }
    out.values = vals;
    out.vectors = vecs;
    return out;
}

struct TridiagEig {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXd vectors; // orthogonal, columns are eigenvectors
};

// Implicit-shift QL for real symmetric tridiagonal matrices with eigenvector
// accumulation (the classic tql2 algorithm). Oracle-grade: O(n^3), used for
// truncated-lattice evolution cross-checks up to ~4001 sites.
inline TridiagEig tridiag_eig_ql(std::vector<double> d, std::vector<double> e) {
    const int n = static_cast<int>(d.size());
    if (static_cast<int>(e.size()) != n - 1 && !(n == 1 && e.empty()))
        throw LengthMismatch("tridiag_eig_ql: off-diagonal must have n-1 entries");

    Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(n, n);
    e.push_back(0.0); // e[n-1] sentinel

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 || std::abs(e[m]) <= 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 50)
                    throw NotConverged("tridiag_eig_ql: too many QL iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = Z(k, i + 1);
                        Z(k, i + 1) = s * Z(k, i) + c * f;
                        Z(k, i) = c * Z(k, i) - s * f;
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
    TridiagEig out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.values[i] = d[order[i]];
        out.vectors.col(i) = Z.col(order[i]);
    }
    return out;
}

// Spectral (operator 2-) norm of a small complex matrix: sqrt of the largest
// eigenvalue of K^dagger K.
inline double operator_norm(const Mat& K) {
    const Mat G = K.adjoint() * K;
    const auto eig = hermitian_eig(G);
    const double top = eig.values[eig.values.size() - 1];
    return std::sqrt(std::max(0.0, top));
}

} // namespace schro
