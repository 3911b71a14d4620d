#pragma once

#include "plsshrink/estimators.hpp"

#include <random>
#include <vector>

namespace plsshrink::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
    return m;
}

inline SymMatrix random_symmetric(Index order, std::mt19937_64& rng) {
    return SymMatrix::symmetrized(random_matrix(order, order, rng));
}

/// Symmetric matrix with a prescribed spectrum (random orthogonal basis).
inline SymMatrix symmetric_with_spectrum(const Vector& eigs, std::mt19937_64& rng) {
    const Index p = eigs.size();
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(p, p, rng));
    const Matrix q = qr.householderQ();
    return SymMatrix::symmetrized(q * eigs.asDiagonal() * q.transpose());
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------
// Independent oracles. These deliberately avoid the code paths they check.
// ---------------------------------------------------------------------------

/// Eigenvalues of a symmetric matrix by scanning det(B − xI) for sign changes
/// and bisecting each bracket. Needs a simple spectrum; the determinant goes
/// through LU, not through any eigensolver.
inline std::vector<double> det_bisection_eigenvalues(const SymMatrix& b, int scan_points = 40000) {
    const Index p = b.order();
    double lo = b(0, 0), hi = b(0, 0);
    for (Index i = 0; i < p; ++i) {
        double r = 0.0;
        for (Index j = 0; j < p; ++j)
            if (j != i) r += std::abs(b(i, j));
        lo = std::min(lo, b(i, i) - r);
        hi = std::max(hi, b(i, i) + r);
    }
    lo -= 1e-8;
    hi += 1e-8;
    auto det_at = [&](double x) {
        return (b.mat() - x * Matrix::Identity(p, p)).determinant();
    };
    std::vector<double> roots;
    double xprev = lo, dprev = det_at(lo);
    for (int k = 1; k <= scan_points; ++k) {
        const double x = lo + (hi - lo) * k / scan_points;
        const double d = det_at(x);
        if ((dprev < 0 && d > 0) || (dprev > 0 && d < 0) || d == 0.0) {
            double a = xprev, fa = dprev, c = x;
            for (int it = 0; it < 200 && c - a > 1e-15 * std::max(1.0, std::abs(c)); ++it) {
                const double mid = 0.5 * (a + c);
                const double fm = det_at(mid);
                if ((fa < 0 && fm < 0) || (fa > 0 && fm > 0)) {
                    a = mid;
                    fa = fm;
                } else {
                    c = mid;
                }
            }
            roots.push_back(0.5 * (a + c));
        }
        xprev = x;
        dprev = d;
    }
    return roots;  // ascending
}

/// Classical Gram-Schmidt on the raw Krylov sequence. Numerically fragile;
/// only meaningful at small order with a benign spectrum.
struct NaiveKrylovBasis {
    Matrix basis;
    Matrix projected;  // WᵗAW
};

inline NaiveKrylovBasis naive_gram_schmidt_krylov(const SymMatrix& a, const Vector& b, Index m) {
    Matrix k(a.order(), m);
    k.col(0) = b;
    for (Index j = 1; j < m; ++j) k.col(j) = a.mat() * k.col(j - 1);
    Matrix w(a.order(), m);
    for (Index j = 0; j < m; ++j) {
        Vector v = k.col(j);
        for (Index i = 0; i < j; ++i) v -= w.col(i).dot(k.col(j)) * w.col(i);
        w.col(j) = v / v.norm();
    }
    return {w, w.transpose() * a.mat() * w};
}

/// Constrained least squares min ‖y − XKz‖ over the raw Krylov columns,
/// solved by a dense SVD pseudo-inverse.
inline Vector dense_constrained_ls(const Matrix& x, const Vector& y, const Matrix& krylov_columns) {
    const Eigen::JacobiSVD<Matrix> svd(x * krylov_columns,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    return krylov_columns * svd.solve(y);
}

// ---------------------------------------------------------------------------
// Seeded random-instance corpus shared by the property suites.
// ---------------------------------------------------------------------------

struct Instance {
    Index n = 0;
    Index p = 0;
    RegressionData data;
    std::string label;
};

/// One seeded regression instance. Index selects among dimension and
/// covariance variations; about one in seven is rank-deficient (p > n).
/// Draws whose positive spectrum is badly conditioned are rejected so that
/// property margins measure the estimators, not floating-point noise.
inline Instance make_instance(std::uint64_t seed, int index) {
    std::mt19937_64 rng(seed + 7919u * static_cast<unsigned>(index));
    std::uniform_int_distribution<int> pick_n(8, 40), pick_p(2, 20);
    Index n = pick_n(rng);
    Index p = pick_p(rng);
    const int variant = index % 7;
    if (variant == 6) {  // rank-deficient block
        n = std::uniform_int_distribution<int>(6, 12)(rng);
        p = std::uniform_int_distribution<int>(13, 20)(rng);
    }
    Matrix x;
    for (int attempt = 0; attempt < 64; ++attempt) {
        if (variant % 3 == 0) {
            x = random_matrix(n, p, rng);
        } else {
            Matrix cov = Matrix::Constant(p, p, variant % 3 == 1 ? 1.0 : 0.5);
            cov.diagonal().setConstant(1.5);
            const Matrix l = cholesky(SymMatrix(cov));
            x = random_matrix(n, p, rng) * l.transpose();
        }
        const Matrix centered = x.rowwise() - x.colwise().mean();
        const SvdResult svd = svd_thin(centered);
        const double smax = svd.singular_values(0);
        const double smin_pos = svd.singular_values(svd.rank - 1);
        if (svd.rank >= 1 && smin_pos >= 1e-3 * smax) break;
    }
    std::normal_distribution<double> nd(2.0, 2.0);
    Vector beta = Vector::Zero(p);
    const Index nonzero = std::max<Index>(1, p / 2);
    for (Index j = 0; j < nonzero; ++j) beta(j) = nd(rng);
    std::shuffle(beta.data(), beta.data() + p, rng);
    std::uniform_real_distribution<double> stnr_pick(0.5, 16.0);
    const double signal = (x * beta).squaredNorm() / static_cast<double>(n);
    const double sigma = std::sqrt(std::max(signal, 1e-8) / stnr_pick(rng));
    std::normal_distribution<double> noise(0.0, sigma);
    Vector y = x * beta;
    for (Index i = 0; i < n; ++i) y(i) += noise(rng);
    return {n, p, RegressionData::center(x, y),
            "instance " + std::to_string(index) + " (n=" + std::to_string(n) +
                ", p=" + std::to_string(p) + ")"};
}

inline std::vector<Instance> make_corpus(std::uint64_t seed, int count) {
    std::vector<Instance> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(make_instance(seed, i));
    return out;
}

}  // namespace plsshrink::testing
