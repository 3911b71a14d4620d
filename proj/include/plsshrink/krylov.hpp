#pragma once

#include "plsshrink/linalg.hpp"

#include <functional>
#include <optional>

namespace plsshrink {

/// Columns b, Ab, ..., A^{m−1}b.
struct KrylovSequence {
    Matrix columns;
};

inline KrylovSequence krylov_sequence(const SymMatrix& a, const Vector& b, Index m) {
    if (m < 1) throw std::invalid_argument("krylov_sequence: m must be positive");
    if (b.size() != a.order()) throw std::invalid_argument("krylov_sequence: dimension mismatch");
    Matrix k(a.order(), m);
    k.col(0) = b;
    for (Index j = 1; j < m; ++j) k.col(j) = a.mat() * k.col(j - 1);
    return {std::move(k)};
}

/// Orthonormal Krylov basis with its tridiagonal projection. While the Krylov
/// space keeps growing, every stored subdiagonal entry is a positive
/// Gram-Schmidt remainder norm.
struct KrylovState {
    Matrix basis;                 // orthonormal columns w_1..w_m
    Tridiagonal tri;              // a_1..a_m, b_1..b_{m−1}
    std::optional<Index> m_star;  // breakdown step, once detected
    Vector residual_norms;        // remainder norm per step

    Index steps() const { return basis.cols(); }
};

/// Lanczos three-term recurrence with one full reorthogonalization pass per
/// step. Runs for min(m_max, m*) steps; the breakdown step m* is detected
/// when the remainder norm drops below rank_tol times the running maximum
/// remainder norm (seeded with ‖b‖).
inline KrylovState lanczos(const SymMatrix& a, const Vector& b, Index m_max, double rank_tol = 1e-10) {
    const Index p = a.order();
    if (b.size() != p) throw std::invalid_argument("lanczos: dimension mismatch");
    if (m_max < 1) throw std::invalid_argument("lanczos: m_max must be positive");
    if (rank_tol <= 0.0) throw std::invalid_argument("lanczos: rank_tol must be positive");
    const double bnorm = b.norm();
    if (bnorm == 0.0) throw std::invalid_argument("lanczos: b must be nonzero");

    m_max = std::min(m_max, p);
    Matrix w(p, m_max);
    Vector diag(m_max);
    Vector sub = Vector::Zero(std::max<Index>(m_max - 1, 0));
    Vector resid(m_max);
    w.col(0) = b / bnorm;
    double scale = bnorm;
    std::optional<Index> mstar;
    Index m = m_max;

    for (Index j = 0; j < m_max; ++j) {
        Vector v = a.mat() * w.col(j);
        diag(j) = w.col(j).dot(v);
        v -= diag(j) * w.col(j);
        if (j > 0) v -= sub(j - 1) * w.col(j - 1);
        auto wj = w.leftCols(j + 1);
        v -= wj * (wj.transpose() * v).eval();
        const double r = v.norm();
        resid(j) = r;
        if (r <= rank_tol * scale) {
            mstar = j + 1;
            m = j + 1;
            break;
        }
        scale = std::max(scale, r);
        if (j + 1 < m_max) {
            sub(j) = r;
            w.col(j + 1) = v / r;
            const double drift = (wj.transpose() * w.col(j + 1)).cwiseAbs().maxCoeff();
            if (drift > 1e-6)
                throw std::runtime_error("lanczos: orthogonality loss " + std::to_string(drift) +
                                         " after reorthogonalization at step " + std::to_string(j + 2));
        }
    }
    if (!mstar && m == p) mstar = p;  // the Krylov space cannot grow past p

    return KrylovState{Matrix(w.leftCols(m)), Tridiagonal(diag.head(m), sub.head(m - 1)), mstar,
                       Vector(resid.head(m))};
}

/// Maximal Krylov dimension: the Lanczos breakdown step, which equals the
/// number of distinct eigenvalues of A carrying a nonzero component of b.
inline Index m_star(const SymMatrix& a, const Vector& b, double rank_tol = 1e-10) {
    return lanczos(a, b, a.order(), rank_tol).m_star.value();
}

struct IntervalWitness {
    double lo = 0.0;
    double hi = 0.0;
    Index assigned = -1;  // eigenvalue index of the larger matrix
};

struct InterlacingReport {
    bool ok = false;
    std::vector<IntervalWitness> intervals;  // between consecutive eigenvalues of the smaller matrix
    Index outside = -1;                      // eigenvalue outside the open interval (μ_m, μ_1)
};

/// Verifies the nesting of eigenvalues along one Lanczos chain: every closed
/// interval between consecutive eigenvalues of T^(m) must receive its own
/// eigenvalue of T^(m+k), and one further eigenvalue must lie outside the
/// open interval (μ_m, μ_1). The assignment is required to be injective;
/// intervals are inflated by tol·‖T‖ to absorb roundoff at the endpoints.
inline InterlacingReport check_interlacing(const Tridiagonal& tm, const Tridiagonal& tmk,
                                           double tol = 1e-10) {
    const Index m = tm.order();
    const Index mk = tmk.order();
    if (mk <= m)
        throw std::invalid_argument("check_interlacing: second matrix must be strictly larger");
    for (Index i = 0; i < m; ++i)
        if (tm.diag()(i) != tmk.diag()(i))
            throw std::invalid_argument("check_interlacing: not a common chain (diagonal differs)");
    for (Index i = 0; i + 1 < m; ++i)
        if (tm.subdiag()(i) != tmk.subdiag()(i))
            throw std::invalid_argument("check_interlacing: not a common chain (subdiagonal differs)");

    const Vector small = tridiag_eigenvalues(tm);  // descending
    const Vector big = tridiag_eigenvalues(tmk);
    const double infl = tol * std::max(1.0, tmk.norm_bound());

    InterlacingReport report;
    for (Index j = 0; j + 1 < m; ++j)
        report.intervals.push_back({small(j + 1) - infl, small(j) + infl, -1});
    const double inner_lo = small(m - 1);
    const double inner_hi = small(0);

    const Index conds = m;  // m−1 intervals plus the outside condition
    auto admissible = [&](Index cond, Index e) {
        if (cond + 1 < conds)
            return big(e) >= report.intervals[cond].lo && big(e) <= report.intervals[cond].hi;
        return big(e) <= inner_lo + infl || big(e) >= inner_hi - infl;
    };

    std::vector<Index> owner(big.size(), -1);
    std::function<bool(Index, std::vector<char>&)> place = [&](Index cond, std::vector<char>& seen) {
        for (Index e = 0; e < big.size(); ++e) {
            if (seen[e] || !admissible(cond, e)) continue;
            seen[e] = 1;
            if (owner[e] < 0 || place(owner[e], seen)) {
                owner[e] = cond;
                return true;
            }
        }
        return false;
    };

    report.ok = true;
    for (Index cond = 0; cond < conds; ++cond) {
        std::vector<char> seen(big.size(), 0);
        if (!place(cond, seen)) report.ok = false;
    }
    for (Index e = 0; e < big.size(); ++e) {
        if (owner[e] < 0) continue;
        if (owner[e] + 1 < conds)
            report.intervals[owner[e]].assigned = e;
        else
            report.outside = e;
    }
    return report;
}

}  // namespace plsshrink
