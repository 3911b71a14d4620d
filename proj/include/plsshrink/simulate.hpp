#pragma once

#include "plsshrink/estimators.hpp"

#include <cstdint>
#include <numeric>
#include <random>

namespace plsshrink {

/// Deterministic per-stream seed derivation (splitmix64 finalizer); replicate
/// streams never depend on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Vector standard_normal_vector(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

/// Columns to zero mean and unit sample variance.
inline Matrix standardized_columns(const Matrix& x) {
    if (x.rows() < 2) throw std::invalid_argument("standardized_columns: need at least two rows");
    Matrix out(x.rows(), x.cols());
    const double denom = static_cast<double>(x.rows() - 1);
    for (Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / denom;
        if (var <= 0.0)
            throw std::invalid_argument("standardized_columns: column " + std::to_string(j) +
                                        " has zero variance");
        out.col(j) = (x.col(j).array() - mean) / std::sqrt(var);
    }
    return out;
}

/// Synthetic design recipe. The built-in examples share the covariance
/// Σ_ii = 1.5, Σ_ij = 1 and draw the nonzero coefficients from N(2, 2²):
///   example 1: n = 30, p = 10, five zero coefficients,
///   example 2: n = 40, p = 20, ten zero coefficients,
///   example 3: n = 10, p = 20, no zero coefficients.
struct DesignSpec {
    int example_id = 0;  // 1..3, or 0 for custom
    Index n = 0;
    Index p = 0;
    SymMatrix covariance;
    Index beta_zero_count = 0;
    double beta_mean = 2.0;
    double beta_stddev = 2.0;
    std::uint64_t seed = 1;
    std::optional<Vector> fixed_beta;  // custom specs may pin the coefficients

    static DesignSpec example(int id, std::uint64_t seed) {
        DesignSpec s;
        s.example_id = id;
        s.seed = seed;
        switch (id) {
            case 1: s.n = 30; s.p = 10; s.beta_zero_count = 5; break;
            case 2: s.n = 40; s.p = 20; s.beta_zero_count = 10; break;
            case 3: s.n = 10; s.p = 20; s.beta_zero_count = 0; break;
            default: throw std::invalid_argument("DesignSpec::example: id must be 1, 2 or 3");
        }
        Matrix cov = Matrix::Constant(s.p, s.p, 1.0);
        cov.diagonal().setConstant(1.5);
        s.covariance = SymMatrix(std::move(cov));
        return s;
    }
};

struct Design {
    Matrix x;
    Vector beta;
};

/// Rows of X drawn i.i.d. from N(0, Σ) through the Cholesky factor; β is a
/// seeded random permutation of the zero block and the N(mean, stddev²)
/// draws. Deterministic given the spec's seed.
inline Design generate_design(const DesignSpec& spec) {
    if (spec.n < 1 || spec.p < 1) throw std::invalid_argument("generate_design: empty dimensions");
    if (spec.covariance.order() != spec.p)
        throw std::invalid_argument("generate_design: covariance order must equal p");
    const Matrix l = cholesky(spec.covariance);
    std::mt19937_64 rng_x(derive_seed(spec.seed, 0));
    Matrix x(spec.n, spec.p);
    for (Index i = 0; i < spec.n; ++i)
        x.row(i) = (l * standard_normal_vector(spec.p, rng_x)).transpose();

    Vector beta;
    if (spec.fixed_beta) {
        if (spec.fixed_beta->size() != spec.p)
            throw std::invalid_argument("generate_design: fixed beta length must equal p");
        beta = *spec.fixed_beta;
    } else {
        if (spec.beta_zero_count < 0 || spec.beta_zero_count > spec.p)
            throw std::invalid_argument("generate_design: zero count out of range");
        std::mt19937_64 rng_b(derive_seed(spec.seed, 1));
        std::normal_distribution<double> nd(spec.beta_mean, spec.beta_stddev);
        Vector raw = Vector::Zero(spec.p);
        for (Index i = spec.beta_zero_count; i < spec.p; ++i) raw(i) = nd(rng_b);
        std::vector<Index> perm(static_cast<size_t>(spec.p));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng_b);
        beta = Vector(spec.p);
        for (Index i = 0; i < spec.p; ++i) beta(i) = raw(perm[static_cast<size_t>(i)]);
    }
    return {std::move(x), std::move(beta)};
}

/// σ with var(Xβ)/var(ε) = stnr, the signal variance taken as the population
/// value βᵗΣβ so that σ does not depend on the realized X.
inline double calibrate_sigma(const SymMatrix& sigma, const Vector& beta, double stnr) {
    if (stnr <= 0.0) throw std::invalid_argument("calibrate_sigma: stnr must be positive");
    if (beta.size() != sigma.order())
        throw std::invalid_argument("calibrate_sigma: dimension mismatch");
    const double signal = beta.dot(sigma.mat() * beta);
    if (signal <= 0.0)
        throw std::domain_error("calibrate_sigma: degenerate signal (beta' Sigma beta <= 0)");
    return std::sqrt(signal / stnr);
}

/// Empirical alternative: the signal variance of the realized Xβ.
inline double calibrate_sigma_empirical(const Matrix& x, const Vector& beta, double stnr) {
    if (stnr <= 0.0) throw std::invalid_argument("calibrate_sigma_empirical: stnr must be positive");
    const Vector s = x * beta;
    const double mean = s.mean();
    const double var = (s.array() - mean).square().sum() / static_cast<double>(s.size() - 1);
    if (var <= 0.0) throw std::domain_error("calibrate_sigma_empirical: degenerate signal");
    return std::sqrt(var / stnr);
}

/// y = Xβ + σ·ε with ε i.i.d. standard normal; deterministic given the seed.
inline Vector draw_response(const Matrix& x, const Vector& beta, double sigma, std::uint64_t seed) {
    if (x.cols() != beta.size()) throw std::invalid_argument("draw_response: dimension mismatch");
    if (sigma < 0.0) throw std::invalid_argument("draw_response: sigma must be nonnegative");
    std::mt19937_64 rng(seed);
    return x * beta + sigma * standard_normal_vector(x.rows(), rng);
}

enum class MseTarget { Beta, XBeta };

inline std::string mse_target_name(MseTarget t) { return t == MseTarget::Beta ? "beta" : "xbeta"; }

struct MseOptions {
    MseTarget target = MseTarget::Beta;
    bool empirical_stnr = false;
    double ridge_penalty = 1.0;
    double rank_tol = kRankTol;
    std::optional<double> sigma_override;  // bypasses the stnr calibration
};

/// Monte-Carlo MSE estimates per method, step and noise level, with the run
/// metadata needed to reproduce them.
struct SimulationReport {
    int example_id = 0;
    Index n = 0;
    Index p = 0;
    std::uint64_t seed = 1;
    int replications = 0;
    MseTarget target = MseTarget::Beta;
    std::vector<Method> methods;
    std::vector<double> stnr_levels;
    std::vector<double> sigmas;
    // mse[stnr][method][m−1] for m = 1..p
    std::vector<std::vector<std::vector<double>>> mse;
    std::string note;
};

/// The fixed-design resampling protocol: X and β are drawn once from the
/// spec, then K responses y = Xβ + σε are redrawn per noise level (X is
/// standardized once, every simulated y is recentered). At and beyond the
/// breakdown step every sweep method coincides with the least-squares
/// solution, and the harness uses that single terminal vector so the
/// equality is exact in the report.
inline SimulationReport estimate_mse(const DesignSpec& spec, const std::vector<double>& stnr_levels,
                                     int replications, const std::vector<Method>& methods,
                                     MseOptions opts = {}) {
    if (replications < 2) throw std::invalid_argument("estimate_mse: need at least 2 replications");
    if (stnr_levels.empty()) throw std::invalid_argument("estimate_mse: no stnr levels");
    if (methods.empty()) throw std::invalid_argument("estimate_mse: no methods");

    const Design design = generate_design(spec);
    const Index n = spec.n;
    const Index p = spec.p;

    SimulationReport report;
    report.example_id = spec.example_id;
    report.n = n;
    report.p = p;
    report.seed = spec.seed;
    report.replications = replications;
    report.methods = methods;
    report.stnr_levels = stnr_levels;
    report.target = opts.target;
    if (p > n && report.target == MseTarget::Beta) {
        report.target = MseTarget::XBeta;
        report.note = "p > n: coefficient target not identifiable, switched to xbeta";
    }

    const Matrix xs = standardized_columns(design.x);
    const Vector theta_x = xs * design.beta;
    const RegressionData base = RegressionData::from_data(xs, Vector::Zero(n));
    const EigenSystem eig = base.eigensystem();
    const Matrix& u = base.svd().right;
    const Vector lam = eig.values;

    for (size_t s = 0; s < stnr_levels.size(); ++s) {
        const double sigma =
            opts.sigma_override
                ? *opts.sigma_override
                : (opts.empirical_stnr ? calibrate_sigma_empirical(xs, design.beta, stnr_levels[s])
                                       : calibrate_sigma(spec.covariance, design.beta, stnr_levels[s]));
        report.sigmas.push_back(sigma);
        std::vector<std::vector<double>> acc(methods.size(),
                                             std::vector<double>(static_cast<size_t>(p), 0.0));
        for (int k = 0; k < replications; ++k) {
            const std::uint64_t seed_k =
                derive_seed(spec.seed, 0x100ull + s * 0x100000ull + static_cast<std::uint64_t>(k));
            const Vector y = draw_response(xs, design.beta, sigma, seed_k);
            const RegressionData data = base.with_response(y, true);
            const Vector c = data.ols_components(opts.rank_tol);
            const Vector beta_ols = u * c;

            auto sq_err = [&](const Vector& beta_hat) {
                if (report.target == MseTarget::Beta) return (beta_hat - design.beta).squaredNorm();
                return (xs * beta_hat - theta_x).squaredNorm();
            };

            std::vector<Vector> beta_pls(static_cast<size_t>(p));
            std::vector<Vector> beta_bound(static_cast<size_t>(p));
            const bool wants_sweep =
                std::any_of(methods.begin(), methods.end(), [](Method m) {
                    return m == Method::Pls || m == Method::PlsShrink || m == Method::Bound;
                });
            if (wants_sweep) {
                const KrylovState state = lanczos(data.gram(), data.cross(), p, opts.rank_tol);
                const Index mstar = state.m_star.value_or(state.steps());
                for (Index m = 1; m <= p; ++m) {
                    if (m >= mstar) {
                        beta_pls[static_cast<size_t>(m - 1)] = beta_ols;
                        beta_bound[static_cast<size_t>(m - 1)] = beta_ols;
                    } else {
                        const ShrinkageProfile prof = shrinkage_factors(state, eig, m, opts.rank_tol);
                        beta_pls[static_cast<size_t>(m - 1)] =
                            u * (prof.factors.array() * c.array()).matrix();
                        beta_bound[static_cast<size_t>(m - 1)] =
                            u * (clip_to_unit(prof.factors).array() * c.array()).matrix();
                    }
                }
            }
            Vector beta_ridge;
            if (std::find(methods.begin(), methods.end(), Method::Ridge) != methods.end()) {
                Vector f(p);
                for (Index i = 0; i < p; ++i) f(i) = lam(i) / (lam(i) + opts.ridge_penalty);
                beta_ridge = u * (f.array() * c.array()).matrix();
            }

            for (size_t mi = 0; mi < methods.size(); ++mi) {
                for (Index m = 1; m <= p; ++m) {
                    double err = 0.0;
                    switch (methods[mi]) {
                        case Method::Pls:
                        case Method::PlsShrink:
                            err = sq_err(beta_pls[static_cast<size_t>(m - 1)]);
                            break;
                        case Method::Bound:
                            err = sq_err(beta_bound[static_cast<size_t>(m - 1)]);
                            break;
                        case Method::Ols:
                            err = sq_err(beta_ols);
                            break;
                        case Method::Pcr: {
                            Vector f = Vector::Zero(p);
                            f.head(std::min(m, base.rank())).setOnes();
                            err = sq_err(u * (f.array() * c.array()).matrix());
                            break;
                        }
                        case Method::Ridge:
                            err = sq_err(beta_ridge);
                            break;
                    }
                    acc[mi][static_cast<size_t>(m - 1)] += err;
                }
            }
        }
        for (auto& row : acc)
            for (auto& v : row) v /= static_cast<double>(replications);
        report.mse.push_back(std::move(acc));
    }
    return report;
}

/// Per-step cross-validation errors, with the number of folds in which some
/// shrinkage factor was clipped at that step.
struct CvCurve {
    Index m_lo = 1;
    Index m_hi = 1;
    std::vector<double> errors;
    std::vector<int> clip_events;
};

/// Seeded size-balanced folds. Standardization is fit on the training folds
/// only and applied to the held-out rows; steps beyond a training fold's
/// breakdown are clamped to its terminal solution. The reported error is the
/// mean squared prediction error on the standardized scale, averaged over
/// folds.
inline CvCurve kfold_cv(const Matrix& xraw, const Vector& yraw, Method method, Index m_lo,
                        Index m_hi, Index folds, std::uint64_t seed, double ridge_penalty = 1.0) {
    const Index n = xraw.rows();
    const Index p = xraw.cols();
    if (yraw.size() != n) throw std::invalid_argument("kfold_cv: dimension mismatch");
    if (folds < 2) throw std::invalid_argument("kfold_cv: need at least two folds");
    if (folds > n) throw std::invalid_argument("kfold_cv: more folds than rows");
    if (m_lo < 1 || m_hi < m_lo || m_hi > p)
        throw std::invalid_argument("kfold_cv: step range out of bounds");

    std::vector<Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(derive_seed(seed, 0xf01d));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> fold_of(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) fold_of[static_cast<size_t>(order[static_cast<size_t>(i)])] = i % folds;

    const Index nm = m_hi - m_lo + 1;
    CvCurve curve{m_lo, m_hi, std::vector<double>(static_cast<size_t>(nm), 0.0),
                  std::vector<int>(static_cast<size_t>(nm), 0)};

    for (Index f = 0; f < folds; ++f) {
        std::vector<Index> train, test;
        for (Index i = 0; i < n; ++i)
            (fold_of[static_cast<size_t>(i)] == f ? test : train).push_back(i);
        Matrix xtr(static_cast<Index>(train.size()), p), xte(static_cast<Index>(test.size()), p);
        Vector ytr(static_cast<Index>(train.size())), yte(static_cast<Index>(test.size()));
        for (size_t i = 0; i < train.size(); ++i) {
            xtr.row(static_cast<Index>(i)) = xraw.row(train[i]);
            ytr(static_cast<Index>(i)) = yraw(train[i]);
        }
        for (size_t i = 0; i < test.size(); ++i) {
            xte.row(static_cast<Index>(i)) = xraw.row(test[i]);
            yte(static_cast<Index>(i)) = yraw(test[i]);
        }

        const RegressionData data = RegressionData::standardize(xtr, ytr);
        const Standardization& st = data.standardization();
        const KrylovState state = lanczos(data.gram(), data.cross(), p, kRankTol);
        const Index mstar = state.m_star.value_or(state.steps());
        const EigenSystem eig = data.eigensystem();
        const Vector c = data.ols_components();
        const Matrix& u = data.svd().right;
        const Vector beta_ols = u * c;
        const Matrix xte_std = (xte.rowwise() - st.x_mean.transpose()).array().rowwise() /
                               st.x_scale.transpose().array();
        const Vector yte_std = (yte.array() - st.y_mean) / st.y_scale;

        for (Index m = m_lo; m <= m_hi; ++m) {
            const size_t idx = static_cast<size_t>(m - m_lo);
            Vector beta;
            bool clipped = false;
            switch (method) {
                case Method::Ols:
                    beta = beta_ols;
                    break;
                case Method::Pls:
                case Method::PlsShrink:
                case Method::Bound: {
                    if (m >= mstar) {
                        beta = beta_ols;
                    } else {
                        const ShrinkageProfile prof = shrinkage_factors(state, eig, m);
                        clipped = (prof.factors.cwiseAbs().array() > 1.0).any();
                        const Vector fac =
                            method == Method::Bound ? clip_to_unit(prof.factors) : prof.factors;
                        beta = u * (fac.array() * c.array()).matrix();
                    }
                    break;
                }
                case Method::Pcr: {
                    Vector fac = Vector::Zero(p);
                    fac.head(std::min(m, data.rank())).setOnes();
                    beta = u * (fac.array() * c.array()).matrix();
                    break;
                }
                case Method::Ridge: {
                    Vector fac(p);
                    const Vector lam = eig.values;
                    for (Index i = 0; i < p; ++i) fac(i) = lam(i) / (lam(i) + ridge_penalty);
                    beta = u * (fac.array() * c.array()).matrix();
                    break;
                }
            }
            const Vector pred = xte_std * beta;
            curve.errors[idx] +=
                (pred - yte_std).squaredNorm() / static_cast<double>(yte_std.size());
            if (clipped) curve.clip_events[idx] += 1;
        }
    }
    for (auto& e : curve.errors) e /= static_cast<double>(folds);
    return curve;
}

}  // namespace plsshrink
