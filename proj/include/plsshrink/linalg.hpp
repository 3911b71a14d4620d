#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plsshrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense symmetric matrix. Symmetry is verified at construction so the
/// spectral routines downstream never have to guess which triangle to trust.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(Matrix m) : mat_(std::move(m)) {
        if (mat_.rows() != mat_.cols())
            throw std::invalid_argument("SymMatrix: matrix is not square");
        for (Index j = 0; j < mat_.cols(); ++j)
            for (Index i = j + 1; i < mat_.rows(); ++i)
                if (mat_(i, j) != mat_(j, i))
                    throw std::invalid_argument("SymMatrix: entries (" + std::to_string(i) + "," +
                                                std::to_string(j) + ") differ between triangles");
    }

    /// Averages the two triangles; the result is symmetric bit for bit.
    static SymMatrix symmetrized(const Matrix& m) {
        if (m.rows() != m.cols())
            throw std::invalid_argument("SymMatrix: matrix is not square");
        Matrix s = 0.5 * (m + m.transpose()).eval();
        return SymMatrix(Unchecked{}, std::move(s));
    }

    /// XᵗX, symmetrized.
    static SymMatrix gram(const Matrix& x) { return symmetrized(x.transpose() * x); }

    Index order() const { return mat_.rows(); }
    const Matrix& mat() const { return mat_; }
    double operator()(Index i, Index j) const { return mat_(i, j); }

private:
    struct Unchecked {};
    SymMatrix(Unchecked, Matrix m) : mat_(std::move(m)) {}

    Matrix mat_;
};

/// Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.
struct EigenSystem {
    Vector values;
    Matrix vectors;  // columns ordered like `values`
};

inline EigenSystem sym_eigen(const SymMatrix& b, double tol = 1e-12) {
    if (tol <= 0.0) throw std::invalid_argument("sym_eigen: tol must be positive");
    if (b.order() < 1) throw std::invalid_argument("sym_eigen: empty matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(b.mat());
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("sym_eigen: no convergence for order-" + std::to_string(b.order()) +
                                 " matrix within the iteration cap");
    EigenSystem out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

/// Thin SVD X = V·diag(σ)·Uᵗ obtained from the eigendecomposition of XᵗX.
/// Accuracy degrades with the squared condition number, which is adequate at
/// the desk scales this library targets; in particular, exactly-zero singular
/// values surface near sqrt(eps)·σ_max, so the rank cutoff must stay well
/// above that floor. Left columns past `rank` are zero.
struct SvdResult {
    Matrix left;             // V, n×p
    Vector singular_values;  // descending
    Matrix right;            // U, p×p orthonormal
    Index rank = 0;          // count of σ above tol·σ_max
};

inline SvdResult svd_thin(const Matrix& x, double tol = 1e-6) {
    if (x.rows() < 1 || x.cols() < 1) throw std::invalid_argument("svd_thin: empty matrix");
    EigenSystem es = sym_eigen(SymMatrix::gram(x));
    const Index p = x.cols();
    SvdResult out;
    out.singular_values = es.values.cwiseMax(0.0).cwiseSqrt();
    out.right = std::move(es.vectors);
    const double smax = out.singular_values(0);
    out.rank = 0;
    for (Index i = 0; i < p; ++i)
        if (out.singular_values(i) > tol * smax) ++out.rank;
    out.left = Matrix::Zero(x.rows(), p);
    for (Index i = 0; i < out.rank; ++i)
        out.left.col(i) = x * out.right.col(i) / out.singular_values(i);
    return out;
}

/// π_B evaluated at λ, where 1 − ∏_{λ_i≠0}(1 − λ/λ_i) = λ·π_B(λ). The
/// telescoped sum below avoids the cancellation of (1 − ∏)/λ near λ = 0.
inline double inverse_polynomial(const Vector& nonzero_eigs, double lambda) {
    double sum = 0.0;
    double prod = 1.0;
    for (Index i = 0; i < nonzero_eigs.size(); ++i) {
        sum += prod / nonzero_eigs(i);
        prod *= 1.0 - lambda / nonzero_eigs(i);
    }
    return sum;
}

/// Polynomial generalized inverse of a PSD matrix: G = π_B(B). Satisfies
/// BGB = B with symmetric BG and GB, and coincides with B⁻¹ when B is
/// nonsingular. For singular B it is a {1,3,4}-inverse only: GBG = G can fail.
inline SymMatrix poly_generalized_inverse(const SymMatrix& b, double eigentol = 1e-10) {
    EigenSystem es = sym_eigen(b);
    const Index p = b.order();
    const double scale = std::max(std::abs(es.values(0)), std::abs(es.values(p - 1)));
    if (es.values(p - 1) < -eigentol * scale)
        throw std::domain_error("poly_generalized_inverse: eigenvalue " +
                                std::to_string(es.values(p - 1)) + " breaks the PSD assumption");
    std::vector<double> nz;
    for (Index i = 0; i < p; ++i)
        if (es.values(i) > eigentol * scale) nz.push_back(es.values(i));
    Eigen::Map<const Vector> nzv(nz.data(), static_cast<Index>(nz.size()));
    Vector pis(p);
    for (Index i = 0; i < p; ++i) pis(i) = inverse_polynomial(nzv, es.values(i));
    return SymMatrix::symmetrized(es.vectors * pis.asDiagonal() * es.vectors.transpose());
}

/// Symmetric tridiagonal matrix stored as diagonal a_1..a_m and subdiagonal
/// b_1..b_{m−1}.
class Tridiagonal {
public:
    Tridiagonal(Vector diag, Vector subdiag) : diag_(std::move(diag)), sub_(std::move(subdiag)) {
        if (diag_.size() < 1) throw std::invalid_argument("Tridiagonal: order must be at least 1");
        if (sub_.size() != diag_.size() - 1)
            throw std::invalid_argument("Tridiagonal: subdiagonal length must be order - 1");
    }

    Index order() const { return diag_.size(); }
    const Vector& diag() const { return diag_; }
    const Vector& subdiag() const { return sub_; }

    bool unreduced(double tol = 0.0) const {
        for (Index i = 0; i < sub_.size(); ++i)
            if (std::abs(sub_(i)) <= tol) return false;
        return true;
    }

    Tridiagonal leading(Index m) const {
        if (m < 1 || m > order())
            throw std::invalid_argument("Tridiagonal::leading: order out of range");
        return Tridiagonal(diag_.head(m), sub_.head(m - 1));
    }

    Matrix dense() const {
        Matrix t = Matrix::Zero(order(), order());
        t.diagonal() = diag_;
        for (Index i = 0; i + 1 < order(); ++i) t(i + 1, i) = t(i, i + 1) = sub_(i);
        return t;
    }

    /// Bound on the spectral radius from Gershgorin disks.
    double norm_bound() const {
        double nb = 0.0;
        for (Index i = 0; i < order(); ++i) {
            double r = std::abs(diag_(i));
            if (i > 0) r += std::abs(sub_(i - 1));
            if (i + 1 < order()) r += std::abs(sub_(i));
            nb = std::max(nb, r);
        }
        return nb;
    }

private:
    Vector diag_;
    Vector sub_;
};

/// Value of a characteristic polynomial in scaled form mantissa·2^exponent.
/// The three-term recursion overflows double for large orders, so the sweep
/// renormalizes by powers of two; only signs and root locations are consumed
/// by the solvers, and those survive the scaling.
struct ScaledCharpoly {
    double mantissa = 1.0;
    long exponent = 0;

    double value() const {
        const long e = std::clamp<long>(exponent, -20000, 20000);
        return std::ldexp(mantissa, static_cast<int>(e));
    }
    int sign() const { return (mantissa > 0.0) - (mantissa < 0.0); }
};

namespace detail {

struct CharpolySweep {
    ScaledCharpoly last;
    int count_below = 0;
};

// χ^(k)(λ) = (a_k − λ)χ^(k−1)(λ) − b²_{k−1}χ^(k−2)(λ), χ^(0) = 1. The number
// of sign changes along the sequence (a zero inherits the previous sign)
// equals the number of eigenvalues strictly below λ.
inline CharpolySweep charpoly_sweep(const Tridiagonal& t, double lambda) {
    const Index m = t.order();
    double prev = 1.0;
    double cur = t.diag()(0) - lambda;
    long exponent = 0;
    int sign_prev = 1;
    int changes = 0;
    auto record = [&](double v) {
        int s = (v > 0.0) - (v < 0.0);
        if (s == 0) s = sign_prev;
        if (s != sign_prev) {
            ++changes;
            sign_prev = s;
        }
    };
    record(cur);
    for (Index k = 1; k < m; ++k) {
        const double bk = t.subdiag()(k - 1);
        const double next = (t.diag()(k) - lambda) * cur - bk * bk * prev;
        prev = cur;
        cur = next;
        record(cur);
        const double mag = std::max(std::abs(cur), std::abs(prev));
        if (mag > 0x1p256) {
            cur = std::ldexp(cur, -256);
            prev = std::ldexp(prev, -256);
            exponent += 256;
        } else if (mag > 0.0 && mag < 0x1p-256) {
            cur = std::ldexp(cur, 256);
            prev = std::ldexp(prev, 256);
            exponent -= 256;
        }
    }
    return {ScaledCharpoly{cur, exponent}, changes};
}

}  // namespace detail

inline ScaledCharpoly charpoly_eval_scaled(const Tridiagonal& t, double lambda) {
    return detail::charpoly_sweep(t, lambda).last;
}

inline double charpoly_eval(const Tridiagonal& t, double lambda) {
    return charpoly_eval_scaled(t, lambda).value();
}

/// Number of eigenvalues of T strictly below lambda (Sturm sign count).
inline int sturm_count_below(const Tridiagonal& t, double lambda) {
    return detail::charpoly_sweep(t, lambda).count_below;
}

/// All eigenvalues, descending, by bisection on the Sturm counts. Absolute
/// accuracy tol·‖T‖. Eigenvalues of an unreduced matrix are simple, so they
/// come out strictly ordered.
inline Vector tridiag_eigenvalues(const Tridiagonal& t, double tol = 1e-14) {
    const Index m = t.order();
    double lo = t.diag()(0), hi = t.diag()(0);
    for (Index i = 0; i < m; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.subdiag()(i - 1));
        if (i + 1 < m) r += std::abs(t.subdiag()(i));
        lo = std::min(lo, t.diag()(i) - r);
        hi = std::max(hi, t.diag()(i) + r);
    }
    const double scale = std::max({std::abs(lo), std::abs(hi), 1e-300});
    Vector asc(m);
    for (Index k = 1; k <= m; ++k) {
        double l = lo, h = hi;
        for (int iter = 0; iter < 200 && (h - l) > tol * scale; ++iter) {
            const double mid = 0.5 * (l + h);
            if (sturm_count_below(t, mid) >= k) {
                h = mid;
            } else {
                l = mid;
            }
        }
        asc(k - 1) = 0.5 * (l + h);
    }
    return asc.reverse();
}

/// Lower-triangular L with LLᵗ = S; S must be positive definite.
inline Matrix cholesky(const SymMatrix& s) {
    const Index p = s.order();
    Matrix l = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
        const double d = s(j, j) - l.row(j).head(j).squaredNorm();
        if (d <= 0.0)
            throw std::runtime_error("cholesky: not positive definite at pivot " + std::to_string(j));
        l(j, j) = std::sqrt(d);
        for (Index i = j + 1; i < p; ++i)
            l(i, j) = (s(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return l;
}

}  // namespace plsshrink
