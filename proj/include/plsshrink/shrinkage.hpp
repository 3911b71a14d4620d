#pragma once

#include "plsshrink/krylov.hpp"

namespace plsshrink {

/// f^(m)(λ) = 1 − ∏(1 − λ/μ_i) over the given nonzero Ritz values. The
/// product over the nonzero values only keeps the formula total when the
/// tridiagonal matrix is singular; f(0) = 0 holds exactly.
inline double shrinkage_factor(const Vector& nonzero_ritz, double lambda) {
    double prod = 1.0;
    for (Index i = 0; i < nonzero_ritz.size(); ++i) prod *= 1.0 - lambda / nonzero_ritz(i);
    return 1.0 - prod;
}

/// Shrinkage factors of one step: the Ritz values of the leading m×m block
/// of the chain's tridiagonal matrix and f^(m)(λ_i) for every eigenvalue of
/// A. Eigenvalues at or below the relative cutoff are reported with factor 0;
/// the smallest eigenvalue λ_p is always evaluated.
struct ShrinkageProfile {
    Index m = 0;
    Vector ritz;                     // descending
    std::vector<bool> ritz_nonzero;  // μ_i above eigentol·μ_1
    Vector lambdas;                  // eigenvalues of A, descending
    Vector factors;                  // f^(m)(λ_i)
    std::vector<bool> lambda_retained;

    Vector nonzero_ritz() const {
        std::vector<double> nz;
        for (Index i = 0; i < ritz.size(); ++i)
            if (ritz_nonzero[static_cast<size_t>(i)]) nz.push_back(ritz(i));
        return Eigen::Map<const Vector>(nz.data(), static_cast<Index>(nz.size()));
    }
};

inline ShrinkageProfile shrinkage_factors(const KrylovState& state, const EigenSystem& eig, Index m,
                                          double eigentol = 1e-10) {
    if (m < 1 || m > state.steps())
        throw std::invalid_argument("shrinkage_factors: m outside the retained Lanczos steps");
    ShrinkageProfile out;
    out.m = m;
    out.ritz = tridiag_eigenvalues(state.tri.leading(m));
    const double mu_max = std::max(out.ritz(0), 0.0);
    out.ritz_nonzero.resize(static_cast<size_t>(m));
    for (Index i = 0; i < m; ++i)
        out.ritz_nonzero[static_cast<size_t>(i)] = out.ritz(i) > eigentol * mu_max;
    const Vector nz = out.nonzero_ritz();

    const Index p = eig.values.size();
    out.lambdas = eig.values;
    out.factors = Vector::Zero(p);
    out.lambda_retained.assign(static_cast<size_t>(p), false);
    const double cutoff = eigentol * std::max(eig.values(0), 0.0);
    for (Index i = 0; i < p; ++i) {
        const bool retained = eig.values(i) > cutoff || i == p - 1;
        out.lambda_retained[static_cast<size_t>(i)] = retained;
        if (retained) out.factors(i) = shrinkage_factor(nz, out.lambdas(i));
    }
    return out;
}

/// Decomposition of [λ_p, λ_1] at the (distinct) nonzero Ritz values:
/// f ≤ 1 on the interval adjacent to zero, alternating upward. Each retained
/// eigenvalue is placed in an interval consistent with sign(f(λ_i) − 1);
/// breakpoints count as closed endpoints since f = 1 exactly there.
struct SignDecomposition {
    std::vector<double> breakpoints;  // ascending: λ_p, nonzero Ritz values, λ_1
    std::vector<bool> upper;          // per interval: true prescribes f ≥ 1
    std::vector<Index> assignment;    // retained eigenvalue index → interval, else −1
};

inline SignDecomposition sign_decomposition(const ShrinkageProfile& profile, double tol = 1e-10) {
    const Index p = profile.lambdas.size();
    const double lam_top = profile.lambdas(0);
    const double lam_bot = profile.lambdas(p - 1);
    const double scale = std::max({1.0, std::abs(lam_top), std::abs(profile.ritz(0))});
    for (Index i = 0; i + 1 < profile.ritz.size(); ++i)
        if (std::abs(profile.ritz(i) - profile.ritz(i + 1)) <= tol * scale)
            throw std::runtime_error("sign_decomposition: reduced chain (repeated Ritz value " +
                                     std::to_string(profile.ritz(i)) + ")");

    const Vector nz = profile.nonzero_ritz();  // descending
    SignDecomposition out;
    out.breakpoints.push_back(lam_bot);
    for (Index i = nz.size(); i-- > 0;)
        out.breakpoints.push_back(std::clamp(nz(i), lam_bot, lam_top));
    out.breakpoints.push_back(lam_top);

    const size_t nint = out.breakpoints.size() - 1;
    out.upper.resize(nint);
    for (size_t k = 0; k < nint; ++k) out.upper[k] = (k % 2 == 1);

    const double slack = tol * scale;
    out.assignment.assign(static_cast<size_t>(p), -1);
    for (Index i = 0; i < p; ++i) {
        if (!profile.lambda_retained[static_cast<size_t>(i)]) continue;
        const double lam = profile.lambdas(i);
        const double f = profile.factors(i);
        Index chosen = -1;
        for (size_t k = 0; k < nint; ++k) {
            if (lam < out.breakpoints[k] - slack || lam > out.breakpoints[k + 1] + slack) continue;
            const bool consistent = out.upper[k] ? f >= 1.0 - tol : f <= 1.0 + tol;
            if (consistent) {
                chosen = static_cast<Index>(k);
                break;
            }
            if (chosen < 0) chosen = static_cast<Index>(k);
        }
        if (chosen < 0 ||
            (out.upper[static_cast<size_t>(chosen)] ? profile.factors(i) < 1.0 - tol
                                                    : profile.factors(i) > 1.0 + tol))
            throw std::runtime_error("sign_decomposition: factor " + std::to_string(f) + " at lambda " +
                                     std::to_string(lam) + " contradicts its interval");
        out.assignment[static_cast<size_t>(i)] = chosen;
    }
    return out;
}

/// Witness for 0 ≤ f^(m)(λ_p) < 1: the smallest eigenvalue of A is never
/// expanded before the terminal step.
struct SmallestFactorCheck {
    bool ok = false;
    double lambda_p = 0.0;
    double factor = 0.0;
};

inline SmallestFactorCheck smallest_eigenvalue_bound(const ShrinkageProfile& profile,
                                                     double margin = 1e-12) {
    const Index p = profile.lambdas.size();
    const double f = profile.factors(p - 1);
    return {f >= 0.0 && f < 1.0 - margin, profile.lambdas(p - 1), f};
}

inline Vector clip_to_unit(const Vector& factors) {
    return factors.cwiseMax(-1.0).cwiseMin(1.0);
}

/// Factors clipped to [−1, 1] componentwise (idempotent).
struct ClippedProfile {
    ShrinkageProfile base;
    Vector clipped;
};

inline ClippedProfile clip_factors(const ShrinkageProfile& profile) {
    return {profile, clip_to_unit(profile.factors)};
}

struct ShrinkageMse {
    double mse_beta = 0.0;
    double mse_y = 0.0;
};

/// Closed-form MSE of a DETERMINISTIC factor rule (PCR, Ridge):
///   MSE(β̂) = Σ (f_i − 1)²(u_iᵗβ)² + σ² Σ f_i²/λ_i
///   MSE(ŷ) = Σ λ_i(f_i − 1)²(u_iᵗβ)² + σ² Σ f_i².
/// Factors that depend on y (PLS, BOUND) are outside this formula's scope;
/// for those, clipping a factor above 1 can even raise the variance.
inline ShrinkageMse linear_shrinkage_mse(const Vector& factors, const Vector& lambdas,
                                         const Vector& beta_components, double sigma2) {
    if (factors.size() != lambdas.size() || factors.size() != beta_components.size())
        throw std::invalid_argument("linear_shrinkage_mse: array lengths differ");
    if (sigma2 <= 0.0) throw std::invalid_argument("linear_shrinkage_mse: sigma2 must be positive");
    double bias_beta = 0.0, var_beta = 0.0, bias_y = 0.0, var_y = 0.0;
    for (Index i = 0; i < factors.size(); ++i) {
        const double f = factors(i);
        const double lam = lambdas(i);
        const double u = beta_components(i);
        if (lam <= 0.0 && f != 0.0)
            throw std::domain_error("linear_shrinkage_mse: nonzero factor at nonpositive eigenvalue " +
                                    std::to_string(lam));
        bias_beta += (f - 1.0) * (f - 1.0) * u * u;
        if (f != 0.0) var_beta += f * f / lam;
        bias_y += lam * (f - 1.0) * (f - 1.0) * u * u;
        var_y += f * f;
    }
    return {bias_beta + sigma2 * var_beta, bias_y + sigma2 * var_y};
}

}  // namespace plsshrink
