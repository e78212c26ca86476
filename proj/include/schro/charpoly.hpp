#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "schro/detail/poly.hpp"
#include "schro/errors.hpp"
#include "schro/linalg.hpp"
#include "schro/model.hpp"

namespace schro {

using detail::Poly;
using detail::cx;

// Hermitian Jacobi matrix data: diagonal a_1..a_p, off-diagonal b_1..b_{p-1}.
// The matrix carries b_j above the diagonal and conj(b_j) below it.
struct JacobiSpec {
    std::vector<cx> a;
    std::vector<cx> b;

    int p() const { return static_cast<int>(a.size()); }

    void validate() const {
        if (a.size() >= 1 && b.size() + 1 != a.size())
            throw LengthMismatch("JacobiSpec: need exactly p-1 off-diagonal entries");
    }

    Mat assemble() const {
        validate();
        const int n = p();
        Mat M = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) M(i, i) = a[i];
        for (int i = 0; i + 1 < n; ++i) {
            M(i, i + 1) = b[i];
            M(i + 1, i) = std::conj(b[i]);
        }
        return M;
    }
};

// A matching: edge indices j_1 < ... < j_k in {1..p-1} whose pair sets
// Omega_j = {j, j+1} are mutually disjoint, i.e. consecutive indices differ by
// at least 2. A single pair is trivially disjoint.
using Matching = std::vector<int>;

struct MatchingTable {
    std::vector<std::vector<Matching>> by_size; // by_size[k] lists size-k matchings
    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& g : by_size) n += g.size();
        return n;
    }
    std::vector<std::size_t> counts() const {
        std::vector<std::size_t> c;
        c.reserve(by_size.size());
        for (const auto& g : by_size) c.push_back(g.size());
        return c;
    }
};

// Exhaustive, duplicate-free enumeration in lexicographic order, grouped by
// size k = 0..floor(p/2). Total count is the Fibonacci number F(p+1).
inline MatchingTable enumerate_matchings(int p) {
    if (p < 2) throw PeriodTooSmall("enumerate_matchings: need p >= 2");
    MatchingTable table;
    table.by_size.resize(static_cast<std::size_t>(p / 2) + 1);
    table.by_size[0].push_back({});

    Matching current;
    // extend the current matching with edges >= start
    auto extend = [&](auto&& self, int start) -> void {
        for (int j = start; j <= p - 1; ++j) {
            current.push_back(j);
            table.by_size[current.size()].push_back(current);
            self(self, j + 2);
            current.pop_back();
        }
    };
    extend(extend, 1);
    return table;
}

// Appendix-style determinant formula: sum over matchings of
//   prod_l (-|b_{j_l}|^2) * prod_{m not covered} a_m.
inline cx det_formula(const JacobiSpec& spec) {
    spec.validate();
    const int p = spec.p();
    if (p == 1) return spec.a[0];
    if (p < 1) throw PeriodTooSmall("det_formula: empty spec");

    const MatchingTable table = enumerate_matchings(p);
    std::vector<char> covered(static_cast<std::size_t>(p) + 1, 0);
    cx det = 0.0;
    for (const auto& group : table.by_size) {
        for (const auto& match : group) {
            std::fill(covered.begin(), covered.end(), 0);
            double weight = 1.0;
            for (int j : match) {
                const cx bj = spec.b[static_cast<std::size_t>(j - 1)];
                weight *= -(bj * std::conj(bj)).real(); // -|b_j|^2
                covered[static_cast<std::size_t>(j)] = 1;
                covered[static_cast<std::size_t>(j) + 1] = 1;
            }
            cx term = weight;
            for (int m = 1; m <= p; ++m)
                if (!covered[static_cast<std::size_t>(m)])
                    term *= spec.a[static_cast<std::size_t>(m - 1)];
            det += term;
        }
    }
    return det;
}

// Three-term recurrence D_k = a_k D_{k-1} - |b_{k-1}|^2 D_{k-2}; works for any p.
inline cx det_recurrence(const JacobiSpec& spec) {
    spec.validate();
    const int p = spec.p();
    cx dkm2 = 1.0; // D_0
    if (p == 0) return dkm2;
    cx dkm1 = spec.a[0]; // D_1
    for (int k = 2; k <= p; ++k) {
        const cx bk = spec.b[static_cast<std::size_t>(k - 2)];
        const cx dk = spec.a[static_cast<std::size_t>(k - 1)] * dkm1 -
                      (bk * std::conj(bk)).real() * dkm2;
        dkm2 = dkm1;
        dkm1 = dk;
    }
    return dkm1;
}

namespace detail {

// Generic Laplace expansion along the first row, skipping structural zeros.
// Exponential on dense matrices, Fibonacci-cost on tridiagonal ones.
inline cx det_laplace(const Mat& M) {
    const int n = static_cast<int>(M.rows());
    if (n == 1) return M(0, 0);
    if (n == 2) return M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    cx det = 0.0;
    double sign = 1.0;
    for (int j = 0; j < n; ++j, sign = -sign) {
        if (M(0, j) == cx(0.0)) continue;
        Mat minor(n - 1, n - 1);
        for (int r = 1; r < n; ++r) {
            int cc = 0;
            for (int c = 0; c < n; ++c) {
                if (c == j) continue;
                minor(r - 1, cc++) = M(r, c);
            }
        }
        det += sign * M(0, j) * det_laplace(minor);
    }
    return det;
}

} // namespace detail

// Cofactor-expansion determinant of the assembled matrix; independent of both
// the matching formula and the recurrence. Guarded because the expansion is
// exponential on dense input.
inline cx det_cofactor(const JacobiSpec& spec) {
    spec.validate();
    if (spec.p() > 14)
        throw MethodUnavailable("det_cofactor: guarded to p <= 14");
    if (spec.p() == 1) return spec.a[0];
    return detail::det_laplace(spec.assemble());
}

// Reference determinant: cofactor expansion where it is affordable, otherwise
// the recurrence.
inline cx det_bruteforce(const JacobiSpec& spec) {
    spec.validate();
    return (spec.p() <= 14) ? det_cofactor(spec) : det_recurrence(spec);
}

// Coefficients (ascending, monic, degree p) of
//   F(zeta) = det(zeta I - A~_p(lambda, z))
//           = D_p(zeta) - lambda^2 E_{p-2}(zeta) - lambda^p (z + 1/z),
// with D/E the tridiagonal characteristic polynomials over V_1..V_p and
// V_2..V_{p-1} respectively (three-term recurrence on polynomials).
inline Poly charpoly_coeffs(const PeriodicPotential& pot, double lambda, cx z) {
    if (z == cx(0.0)) throw ZeroCornerParameter("charpoly_coeffs: z must be nonzero");
    const int p = pot.p();
    const double l2 = lambda * lambda;

    auto tridiag_polys = [&](int first, int count) {
        // characteristic polynomials over V_first..V_{first+count-1}, 1-based
        Poly dm2 = {cx(1.0)}; // D_0
        Poly dm1 = dm2;
        for (int k = 0; k < count; ++k) {
            const double vk = pot.at(first + k);
            Poly dk = detail::poly_mul_linear(dm1, cx(vk)); // (x - V_k) * D_{k-1}
            if (k >= 1) dk = detail::poly_add(dk, detail::poly_scale(dm2, cx(-l2)));
            dm2 = dm1;
            dm1 = dk;
        }
        return dm1;
    };

    Poly F = tridiag_polys(1, p);
    const Poly E = tridiag_polys(2, p - 2); // {1} when p = 2
    F = detail::poly_add(F, detail::poly_scale(E, cx(-l2)));
    const cx corner = std::pow(lambda, p) * (z + 1.0 / z);
    F[0] -= corner;
    return F;
}

// Pointwise F(zeta) and F'(zeta) through the same D/E recurrences, without
// expanding coefficients. Near a root zeta ~ V_l every intermediate stays at
// the local product scale, so the evaluation error tracks |zeta - V_l|
// instead of the global coefficient size; Newton steps on this evaluator
// reach roots to relative-to-offset machine accuracy.
inline std::pair<cx, cx> charpoly_eval(const PeriodicPotential& pot, double lambda, cx z,
                                       cx zeta) {
    if (z == cx(0.0)) throw ZeroCornerParameter("charpoly_eval: z must be nonzero");
    const int p = pot.p();
    const double l2 = lambda * lambda;
    auto tridiag_val = [&](int first, int count) {
        cx dm2 = 1.0, dm1 = 1.0;   // values
        cx gm2 = 0.0, gm1 = 0.0;   // derivatives
        for (int k = 0; k < count; ++k) {
            const cx lin = zeta - pot.at(first + k);
            cx dk = lin * dm1;
            cx gk = dm1 + lin * gm1;
            if (k >= 1) {
                dk -= l2 * dm2;
                gk -= l2 * gm2;
            }
            dm2 = dm1; dm1 = dk;
            gm2 = gm1; gm1 = gk;
        }
        return std::pair<cx, cx>(dm1, gm1);
    };
    const auto [D, dD] = tridiag_val(1, p);
    const auto [E, dE] = tridiag_val(2, p - 2);
    const cx corner = std::pow(lambda, p) * (z + 1.0 / z);
    return {D - l2 * E - corner, dD - l2 * dE};
}

// Pointwise split F = f + g with g = lambda^2 h_p - lambda^p (z + 1/z).
struct CharPolySplit {
    cx f;
    cx h_p;
    cx g;
    cx F;
};

// H(zeta, lambda, p): the matching expansion of (D_p - f)/lambda^2,
//   H = sum_{k=1}^{floor(p/2)} (-1)^k lambda^{2k-2}
//        sum_{|matching| = k} prod_{m not covered} (zeta - V_m).
inline cx h_matching_sum(const PeriodicPotential& pot, double lambda, cx zeta) {
    const int p = pot.p();
    const MatchingTable table = enumerate_matchings(p);
    std::vector<char> covered(static_cast<std::size_t>(p) + 1, 0);
    cx H = 0.0;
    for (std::size_t k = 1; k < table.by_size.size(); ++k) {
        const double sign = (k % 2 == 1) ? -1.0 : 1.0;
        const double lpow = std::pow(lambda, 2.0 * static_cast<double>(k) - 2.0);
        for (const auto& match : table.by_size[k]) {
            std::fill(covered.begin(), covered.end(), 0);
            for (int j : match) {
                covered[static_cast<std::size_t>(j)] = 1;
                covered[static_cast<std::size_t>(j) + 1] = 1;
            }
            cx term = 1.0;
            for (int m = 1; m <= p; ++m)
                if (!covered[static_cast<std::size_t>(m)]) term *= zeta - pot.at(m);
            H += sign * lpow * term;
        }
    }
    return H;
}

namespace detail {

inline cx inner_tridiag_det(const PeriodicPotential& pot, double lambda, cx zeta) {
    // det of the (p-2) x (p-2) tridiagonal block over V_2..V_{p-1}; 1 for p = 2.
    const int p = pot.p();
    const double l2 = lambda * lambda;
    cx em2 = 1.0;
    cx em1 = 1.0;
    for (int k = 0; k < p - 2; ++k) {
        cx ek = (zeta - pot.at(2 + k)) * em1;
        if (k >= 1) ek -= l2 * em2;
        em2 = em1;
        em1 = ek;
    }
    return em1;
}

} // namespace detail

struct HpValue {
    cx value;
    double bound;   // C from the constants ledger formula
    bool within;    // |value| <= bound
};

// h_p(lambda, zeta) = H(zeta, lambda, p) - E_{p-2}(zeta), on the domain
// lambda in [0, 1], zeta within gamma/2 of some V_j.
inline HpValue h_p_eval(const PeriodicPotential& pot, double lambda, cx zeta) {
    if (lambda < 0.0 || lambda > 1.0)
        throw DomainViolation("h_p_eval: lambda must lie in [0, 1]");
    const double half = pot.gap() / 2.0;
    bool inside = false;
    for (int m = 1; m <= pot.p(); ++m)
        if (std::abs(zeta - pot.at(m)) <= half * (1.0 + 1e-12)) { inside = true; break; }
    if (!inside)
        throw DomainViolation("h_p_eval: zeta outside every gamma/2 disk");

    const cx H = h_matching_sum(pot, lambda, zeta);
    const cx E = detail::inner_tridiag_det(pot, lambda, zeta);
    HpValue out;
    out.value = H - E;
    const double s = pot.range() + half;
    out.bound = std::pow(2.0, pot.p()) * std::pow(s, pot.p()) +
                std::pow(s + 2.0, pot.p() - 2);
    out.within = std::abs(out.value) <= out.bound;
    return out;
}

inline CharPolySplit charpoly_split(const PeriodicPotential& pot, double lambda,
                                    cx z, cx zeta) {
    if (z == cx(0.0)) throw ZeroCornerParameter("charpoly_split: z must be nonzero");
    CharPolySplit s;
    s.f = 1.0;
    for (int m = 1; m <= pot.p(); ++m) s.f *= zeta - pot.at(m);
    s.h_p = h_p_eval(pot, lambda, zeta).value;
    s.g = lambda * lambda * s.h_p - std::pow(lambda, pot.p()) * (z + 1.0 / z);
    s.F = s.f + s.g;
    return s;
}

} // namespace schro
