#pragma once

#include "plsshrink/shrinkage.hpp"

namespace plsshrink {

enum class Method { Ols, Pls, PlsShrink, Bound, Pcr, Ridge };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::Ols: return "ols";
        case Method::Pls: return "pls";
        case Method::PlsShrink: return "pls_shrink";
        case Method::Bound: return "bound";
        case Method::Pcr: return "pcr";
        case Method::Ridge: return "ridge";
    }
    return "unknown";
}

inline Method method_from_string(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "ols") return Method::Ols;
    if (s == "pls") return Method::Pls;
    if (s == "pls_shrink") return Method::PlsShrink;
    if (s == "bound") return Method::Bound;
    if (s == "pcr") return Method::Pcr;
    if (s == "ridge") return Method::Ridge;
    throw std::invalid_argument("unknown method '" + s +
                                "' (expected one of ols, pls, pls_shrink, bound, pcr, ridge)");
}

// Eigenvalue-level decisions (Lanczos breakdown, nonzero-Ritz products) work
// at this relative tolerance; singular-value cutoffs need the looser one
// because the Gram-matrix route squares the condition number.
inline constexpr double kRankTol = 1e-10;
inline constexpr double kSingularValueTol = 1e-6;

/// Per-column transform retained for prediction.
struct Standardization {
    Vector x_mean;
    Vector x_scale;
    double y_mean = 0.0;
    double y_scale = 1.0;
};

/// Centered (optionally unit-variance) design with its cached factorizations:
/// A = XᵗX, b = Xᵗy and the thin SVD of X.
class RegressionData {
public:
    /// Columns of X to zero mean and unit sample variance; y likewise.
    static RegressionData standardize(const Matrix& xraw, const Vector& yraw) {
        check_shape(xraw, yraw);
        Standardization s;
        s.x_mean = xraw.colwise().mean();
        s.x_scale = Vector(xraw.cols());
        const double denom = static_cast<double>(xraw.rows() - 1);
        for (Index j = 0; j < xraw.cols(); ++j) {
            const double var = (xraw.col(j).array() - s.x_mean(j)).square().sum() / denom;
            if (var <= 0.0)
                throw std::invalid_argument("standardize: column " + std::to_string(j) +
                                            " has zero variance");
            s.x_scale(j) = std::sqrt(var);
        }
        s.y_mean = yraw.mean();
        const double yvar = (yraw.array() - s.y_mean).square().sum() / denom;
        if (yvar <= 0.0) throw std::invalid_argument("standardize: response has zero variance");
        s.y_scale = std::sqrt(yvar);
        Matrix x = (xraw.rowwise() - s.x_mean.transpose()).array().rowwise() /
                   s.x_scale.transpose().array();
        Vector y = (yraw.array() - s.y_mean) / s.y_scale;
        return RegressionData(std::move(x), std::move(y), std::move(s));
    }

    /// Mean removal only; used where rescaling would change the estimand.
    static RegressionData center(const Matrix& xraw, const Vector& yraw) {
        check_shape(xraw, yraw);
        Standardization s;
        s.x_mean = xraw.colwise().mean();
        s.x_scale = Vector::Ones(xraw.cols());
        s.y_mean = yraw.mean();
        Matrix x = xraw.rowwise() - s.x_mean.transpose();
        Vector y = yraw.array() - s.y_mean;
        return RegressionData(std::move(x), std::move(y), std::move(s));
    }

    /// Takes X and y verbatim (already-prepared data and test fixtures).
    static RegressionData from_data(Matrix x, Vector y) {
        if (x.rows() != y.size())
            throw std::invalid_argument("RegressionData: row count of X must match y");
        Standardization s;
        s.x_mean = Vector::Zero(x.cols());
        s.x_scale = Vector::Ones(x.cols());
        return RegressionData(std::move(x), std::move(y), std::move(s));
    }

    /// Same design, new response: recomputes b = Xᵗy only, reusing the cached
    /// factorizations of X.
    RegressionData with_response(const Vector& yraw, bool recenter = true) const {
        if (yraw.size() != x_.rows())
            throw std::invalid_argument("with_response: length mismatch");
        RegressionData out(*this);
        out.std_.y_mean = recenter ? yraw.mean() : 0.0;
        out.std_.y_scale = 1.0;
        out.y_ = yraw.array() - out.std_.y_mean;
        out.cross_ = x_.transpose() * out.y_;
        return out;
    }

    Index n() const { return x_.rows(); }
    Index p() const { return x_.cols(); }
    const Matrix& x() const { return x_; }
    const Vector& response() const { return y_; }
    const SymMatrix& gram() const { return gram_; }
    const Vector& cross() const { return cross_; }
    const SvdResult& svd() const { return svd_; }
    Index rank() const { return svd_.rank; }
    const Standardization& standardization() const { return std_; }

    /// Eigendecomposition of A = XᵗX implied by the stored SVD.
    EigenSystem eigensystem() const {
        return {svd_.singular_values.array().square(), svd_.right};
    }

    /// Coefficients c of the least-squares components: β_OLS = U·c with
    /// c_i = u_iᵗb/λ_i over the singular values above tol·σ_max.
    Vector ols_components(double tol = kSingularValueTol) const {
        const Vector& sv = svd_.singular_values;
        const double smax = sv(0);
        const Vector ub = svd_.right.transpose() * cross_;
        Vector c = Vector::Zero(p());
        for (Index i = 0; i < p(); ++i)
            if (sv(i) > tol * smax) c(i) = ub(i) / (sv(i) * sv(i));
        return c;
    }

    /// β = Σ f(λ_i)·z_i for a per-eigenvalue factor vector.
    Vector beta_from_factors(const Vector& factors, double tol = kSingularValueTol) const {
        const Vector c = ols_components(tol);
        return svd_.right * (factors.array() * c.array()).matrix();
    }

private:
    RegressionData(Matrix x, Vector y, Standardization s)
        : x_(std::move(x)),
          y_(std::move(y)),
          std_(std::move(s)),
          gram_(SymMatrix::gram(x_)),
          cross_(x_.transpose() * y_),
          svd_(svd_thin(x_, kSingularValueTol)) {}

    static void check_shape(const Matrix& x, const Vector& y) {
        if (x.rows() != y.size())
            throw std::invalid_argument("RegressionData: row count of X must match y");
        if (x.rows() < 2) throw std::invalid_argument("RegressionData: need at least two rows");
    }

    Matrix x_;
    Vector y_;
    Standardization std_;
    SymMatrix gram_;
    Vector cross_;
    SvdResult svd_;
};

struct EstimatorResult {
    Method method = Method::Ols;
    double hyper = 0.0;  // step m, component count or ridge penalty
    Vector beta;
    Vector fitted;  // X·beta
    std::string note;
};

namespace detail {

inline EstimatorResult make_result(const RegressionData& data, Method method, double hyper,
                                   Vector beta, std::string note = {}) {
    Vector fitted = data.x() * beta;
    return {method, hyper, std::move(beta), std::move(fitted), std::move(note)};
}

}  // namespace detail

/// Minimal-norm least squares through the stored SVD.
inline EstimatorResult ols(const RegressionData& data, double tol = kSingularValueTol) {
    return detail::make_result(data, Method::Ols, 0.0, data.svd().right * data.ols_components(tol));
}

/// PLS after m steps through the Lanczos basis: β = W·π(T)·Wᵗb, with π(T)
/// the polynomial generalized inverse of the projected matrix. Requests past
/// the breakdown step are clamped there, where the solution is stationary.
inline EstimatorResult pls_krylov(const RegressionData& data, Index m, double rank_tol = kRankTol) {
    if (m < 1) throw std::invalid_argument("pls_krylov: m must be positive");
    if (data.cross().norm() == 0.0)
        return detail::make_result(data, Method::Pls, 0.0, Vector::Zero(data.p()),
                                   "empty Krylov space (b = 0), returning beta = 0");
    const KrylovState state = lanczos(data.gram(), data.cross(), std::min(m, data.p()), rank_tol);
    const Index m_eff = state.steps();
    const SymMatrix g = poly_generalized_inverse(SymMatrix(state.tri.dense()), rank_tol);
    Vector beta = state.basis * (g.mat() * (state.basis.transpose() * data.cross()));
    std::string note = m_eff < m ? "clamped at m* = " + std::to_string(m_eff) : std::string{};
    return detail::make_result(data, Method::Pls, static_cast<double>(m_eff), std::move(beta),
                               std::move(note));
}

/// The same estimator assembled the other way round, from the shrinkage
/// factors and the least-squares components.
inline EstimatorResult pls_shrinkage_route(const RegressionData& data, Index m,
                                           double eigentol = kRankTol) {
    if (m < 1) throw std::invalid_argument("pls_shrinkage_route: m must be positive");
    if (data.cross().norm() == 0.0)
        return detail::make_result(data, Method::PlsShrink, 0.0, Vector::Zero(data.p()),
                                   "empty Krylov space (b = 0), returning beta = 0");
    const KrylovState state = lanczos(data.gram(), data.cross(), std::min(m, data.p()), eigentol);
    const Index m_eff = state.steps();
    const ShrinkageProfile prof = shrinkage_factors(state, data.eigensystem(), m_eff, eigentol);
    Vector beta = data.beta_from_factors(prof.factors);
    std::string note = m_eff < m ? "clamped at m* = " + std::to_string(m_eff) : std::string{};
    return detail::make_result(data, Method::PlsShrink, static_cast<double>(m_eff), std::move(beta),
                               std::move(note));
}

/// PLS with the shrinkage factors clipped to [−1, 1].
inline EstimatorResult bound_estimator(const RegressionData& data, Index m,
                                       double eigentol = kRankTol) {
    if (m < 1) throw std::invalid_argument("bound_estimator: m must be positive");
    if (data.cross().norm() == 0.0)
        return detail::make_result(data, Method::Bound, 0.0, Vector::Zero(data.p()),
                                   "empty Krylov space (b = 0), returning beta = 0");
    const KrylovState state = lanczos(data.gram(), data.cross(), std::min(m, data.p()), eigentol);
    const Index m_eff = state.steps();
    const ShrinkageProfile prof = shrinkage_factors(state, data.eigensystem(), m_eff, eigentol);
    Vector beta = data.beta_from_factors(clip_to_unit(prof.factors));
    std::string note = m_eff < m ? "clamped at m* = " + std::to_string(m_eff) : std::string{};
    return detail::make_result(data, Method::Bound, static_cast<double>(m_eff), std::move(beta),
                               std::move(note));
}

/// Keep the top-k principal components of the least-squares solution.
inline EstimatorResult pcr(const RegressionData& data, Index k) {
    if (k < 1 || k > data.rank())
        throw std::invalid_argument("pcr: component count " + std::to_string(k) + " outside [1, " +
                                    std::to_string(data.rank()) + "]");
    Vector f = Vector::Zero(data.p());
    f.head(k).setOnes();
    return detail::make_result(data, Method::Pcr, static_cast<double>(k), data.beta_from_factors(f));
}

/// Ridge through the factor form f(λ) = λ/(λ + penalty); equals the direct
/// solve (A + penalty·Id)β = b for b in the range of A.
inline EstimatorResult ridge(const RegressionData& data, double penalty) {
    if (penalty <= 0.0) throw std::invalid_argument("ridge: penalty must be positive");
    const Vector lam = data.svd().singular_values.array().square();
    Vector f(data.p());
    for (Index i = 0; i < data.p(); ++i) f(i) = lam(i) / (lam(i) + penalty);
    return detail::make_result(data, Method::Ridge, penalty, data.beta_from_factors(f));
}

/// Applies the stored column transform to new raw rows and evaluates X·β.
/// Fitted values come back on the standardized scale unless destandardize_y
/// is set.
inline Vector predict(const EstimatorResult& fit, const Matrix& xnew_raw, const Standardization& s,
                      bool destandardize_y = false) {
    if (xnew_raw.cols() != fit.beta.size())
        throw std::invalid_argument("predict: column count mismatch");
    if (xnew_raw.rows() == 0) return Vector();
    const Matrix xs = (xnew_raw.rowwise() - s.x_mean.transpose()).array().rowwise() /
                      s.x_scale.transpose().array();
    Vector yhat = xs * fit.beta;
    if (destandardize_y) yhat = (yhat.array() * s.y_scale) + s.y_mean;
    return yhat;
}

}  // namespace plsshrink
