#include "support/helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace plsshrink;
using plsshrink::testing::max_abs;
using plsshrink::testing::symmetric_with_spectrum;

namespace {

struct Fixture {
    SymMatrix a;
    Vector b;
    KrylovState state;
    EigenSystem eig;
};

// the singular 2x2 chain: A = diag(2, 0), b = (1, 1)
Fixture singular_fixture() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 2.0;
    SymMatrix a(m);
    Vector b = (Vector(2) << 1.0, 1.0).finished();
    KrylovState state = lanczos(a, b, 2);
    EigenSystem eig = sym_eigen(a);
    return {std::move(a), std::move(b), std::move(state), std::move(eig)};
}

}  // namespace

TEST_CASE("factors of the singular 2x2 chain") {
    const Fixture fx = singular_fixture();

    const ShrinkageProfile m1 = shrinkage_factors(fx.state, fx.eig, 1);
    REQUIRE(m1.ritz(0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(m1.factors(0) == Catch::Approx(2.0).margin(1e-12));  // f(2) = 2 expands
    REQUIRE(m1.factors(1) == 0.0);                               // f(0) = 0 exactly

    const ShrinkageProfile m2 = shrinkage_factors(fx.state, fx.eig, 2);
    REQUIRE(m2.ritz(0) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(std::abs(m2.ritz(1)) < 1e-12);
    REQUIRE(m2.ritz_nonzero[0]);
    REQUIRE(!m2.ritz_nonzero[1]);  // zero Ritz value leaves the product
    REQUIRE(m2.factors(0) == Catch::Approx(1.0).margin(1e-12));  // f(2) = 1
    REQUIRE(m2.factors(1) == 0.0);
}

TEST_CASE("factors are one on the active spectrum at the breakdown step") {
    std::mt19937_64 rng(5150);
    const Vector eigs = (Vector(5) << 9.0, 5.5, 3.0, 1.7, 0.6).finished();
    const SymMatrix a = symmetric_with_spectrum(eigs, rng);
    const Vector b = plsshrink::testing::random_matrix(5, 1, rng);
    const KrylovState state = lanczos(a, b, 5);
    REQUIRE(state.m_star.value() == 5);
    const EigenSystem eig = sym_eigen(a);
    const ShrinkageProfile prof = shrinkage_factors(state, eig, 5);
    for (Index i = 0; i < 5; ++i) REQUIRE(prof.factors(i) == Catch::Approx(1.0).margin(1e-8));

    // root property at every nonzero Ritz value, any step
    for (Index m = 1; m <= 5; ++m) {
        const ShrinkageProfile p = shrinkage_factors(state, eig, m);
        const Vector nz = p.nonzero_ritz();
        for (Index i = 0; i < nz.size(); ++i)
            REQUIRE(shrinkage_factor(nz, nz(i)) == Catch::Approx(1.0).margin(1e-8));
        REQUIRE(shrinkage_factor(nz, 0.0) == 0.0);
    }
}

TEST_CASE("sign decomposition of the fixture") {
    const Fixture fx = singular_fixture();
    const ShrinkageProfile m1 = shrinkage_factors(fx.state, fx.eig, 1);
    const SignDecomposition sd = sign_decomposition(m1);
    REQUIRE(sd.breakpoints.size() == 3);  // 0, 1, 2
    REQUIRE(sd.breakpoints[1] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(!sd.upper[0]);
    REQUIRE(sd.upper[1]);
    REQUIRE(sd.assignment[0] == 1);  // lambda = 2 sits in the expanded interval
    REQUIRE(sd.assignment[1] == 0);  // lambda = 0 sits below the Ritz value
}

TEST_CASE("sign alternation verified at interval midpoints") {
    std::mt19937_64 rng(61);
    const Vector eigs = (Vector(6) << 11.0, 8.0, 5.0, 3.0, 1.5, 0.4).finished();
    const SymMatrix a = symmetric_with_spectrum(eigs, rng);
    const Vector b = plsshrink::testing::random_matrix(6, 1, rng);
    const KrylovState state = lanczos(a, b, 6);
    const EigenSystem eig = sym_eigen(a);
    for (Index m = 1; m + 1 <= state.steps(); ++m) {
        const ShrinkageProfile prof = shrinkage_factors(state, eig, m);
        const SignDecomposition sd = sign_decomposition(prof);
        const Vector nz = prof.nonzero_ritz();
        for (size_t k = 0; k + 1 < sd.breakpoints.size(); ++k) {
            const double lo = sd.breakpoints[k], hi = sd.breakpoints[k + 1];
            if (hi - lo < 1e-9) continue;
            const double f_mid = shrinkage_factor(nz, 0.5 * (lo + hi));
            if (sd.upper[k])
                REQUIRE(f_mid >= 1.0 - 1e-10);
            else
                REQUIRE(f_mid <= 1.0 + 1e-10);
        }
    }
}

TEST_CASE("sign decomposition rejects repeated Ritz values") {
    ShrinkageProfile fake;
    fake.m = 2;
    fake.ritz = (Vector(2) << 1.0, 1.0 - 1e-14).finished();
    fake.ritz_nonzero = {true, true};
    fake.lambdas = (Vector(2) << 2.0, 0.5).finished();
    fake.factors = (Vector(2) << 1.0, 1.0).finished();
    fake.lambda_retained = {true, true};
    REQUIRE_THROWS_AS(sign_decomposition(fake), std::runtime_error);
}

TEST_CASE("the smallest eigenvalue is never expanded before the last step") {
    const Fixture fx = singular_fixture();
    const ShrinkageProfile m1 = shrinkage_factors(fx.state, fx.eig, 1);
    const SmallestFactorCheck check = smallest_eigenvalue_bound(m1);
    REQUIRE(check.ok);
    REQUIRE(check.factor == 0.0);

    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        Vector eigs(6);
        std::uniform_real_distribution<double> ud(0.2, 9.0);
        for (Index i = 0; i < 6; ++i) eigs(i) = ud(rng);
        std::sort(eigs.data(), eigs.data() + 6, std::greater<>());
        const SymMatrix a = symmetric_with_spectrum(eigs, rng);
        const Vector b = plsshrink::testing::random_matrix(6, 1, rng);
        const KrylovState state = lanczos(a, b, 6);
        const EigenSystem eig = sym_eigen(a);
        const Index mstar = state.m_star.value();
        for (Index m = 1; m < mstar; ++m) {
            const SmallestFactorCheck c =
                smallest_eigenvalue_bound(shrinkage_factors(state, eig, m));
            REQUIRE(c.ok);
            if (m == 1) {
                // f^(1)(lambda_p) = lambda_p / a_1
                const double expected = eig.values(5) / state.tri.diag()(0);
                REQUIRE(c.factor == Catch::Approx(expected).margin(1e-10));
                REQUIRE(c.factor > 0.0);
            }
        }
    }
}

TEST_CASE("factor parity at the top eigenvalue") {
    std::mt19937_64 rng(81);
    const Vector eigs = (Vector(5) << 7.0, 4.0, 2.5, 1.2, 0.5).finished();
    const SymMatrix a = symmetric_with_spectrum(eigs, rng);
    const Vector b = plsshrink::testing::random_matrix(5, 1, rng);
    const KrylovState state = lanczos(a, b, 5);
    const EigenSystem eig = sym_eigen(a);
    bool expanded_somewhere = false;
    for (Index m = 1; m < state.m_star.value(); ++m) {
        const ShrinkageProfile prof = shrinkage_factors(state, eig, m);
        const Vector nz = prof.nonzero_ritz();
        if (eig.values(0) <= prof.ritz(0) + 1e-8) continue;
        const int expected_sign = nz.size() % 2 == 1 ? 1 : -1;
        const double diff = prof.factors(0) - 1.0;
        REQUIRE(diff * expected_sign > 0.0);
        if (prof.factors.maxCoeff() > 1.0 + 1e-10) expanded_somewhere = true;
    }
    REQUIRE(expanded_somewhere);  // some factor always exceeds one when m* >= 2
}

TEST_CASE("clipping factors") {
    ShrinkageProfile prof;
    prof.m = 1;
    prof.ritz = (Vector(1) << 1.0).finished();
    prof.ritz_nonzero = {true};
    prof.lambdas = (Vector(3) << 3.0, 1.0, 0.2).finished();
    prof.factors = (Vector(3) << 2.0, 0.5, -1.2).finished();
    prof.lambda_retained = {true, true, true};

    const ClippedProfile clipped = clip_factors(prof);
    REQUIRE(clipped.clipped(0) == 1.0);
    REQUIRE(clipped.clipped(1) == 0.5);
    REQUIRE(clipped.clipped(2) == -1.0);

    // idempotent, and the identity region is untouched
    REQUIRE(clip_to_unit(clipped.clipped) == clipped.clipped);
    const Vector mild = (Vector(3) << 0.9, -0.4, 1.0).finished();
    REQUIRE(clip_to_unit(mild) == mild);
}

TEST_CASE("closed-form MSE of deterministic factor rules") {
    const Vector lambdas = (Vector(2) << 2.0, 1.0).finished();
    const Vector comps = (Vector(2) << 1.0, 1.0).finished();

    // unbiased rule: pure variance
    const ShrinkageMse unbiased = linear_shrinkage_mse(Vector::Ones(2), lambdas, comps, 1.0);
    REQUIRE(unbiased.mse_beta == Catch::Approx(1.0 / 2.0 + 1.0).margin(1e-14));
    REQUIRE(unbiased.mse_y == Catch::Approx(2.0).margin(1e-14));

    // null rule: pure bias
    const ShrinkageMse null_rule = linear_shrinkage_mse(Vector::Zero(2), lambdas, comps, 1.0);
    REQUIRE(null_rule.mse_beta == Catch::Approx(2.0).margin(1e-14));
    REQUIRE(null_rule.mse_y == Catch::Approx(3.0).margin(1e-14));

    // ridge factors at penalty 1: (1/9 + 1/4) + (2/9 + 1/4) = 5/6
    const Vector ridge_f = (Vector(2) << 2.0 / 3.0, 0.5).finished();
    const ShrinkageMse ridge_mse = linear_shrinkage_mse(ridge_f, lambdas, comps, 1.0);
    REQUIRE(ridge_mse.mse_beta == Catch::Approx(5.0 / 6.0).margin(1e-14));

    Vector bad_lambda = (Vector(2) << 2.0, 0.0).finished();
    REQUIRE_THROWS_AS(linear_shrinkage_mse(ridge_f, bad_lambda, comps, 1.0), std::domain_error);
}

TEST_CASE("ridge MSE formula confirmed by direct simulation") {
    // 2-variable model with X = diag(sqrt(2), 1), beta = (1, 1), sigma = 1.
    // The ridge estimate at penalty 1 is diag(sqrt(2)/3, 1/2)·y.
    std::mt19937_64 rng(20260810);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double sqrt2 = std::sqrt(2.0);
    const int reps = 200000;
    double acc = 0.0;
    for (int k = 0; k < reps; ++k) {
        const double y1 = sqrt2 * 1.0 + nd(rng);
        const double y2 = 1.0 * 1.0 + nd(rng);
        const double b1 = sqrt2 / 3.0 * y1;
        const double b2 = 0.5 * y2;
        acc += (b1 - 1.0) * (b1 - 1.0) + (b2 - 1.0) * (b2 - 1.0);
    }
    const double mc = acc / reps;
    REQUIRE(mc == Catch::Approx(5.0 / 6.0).epsilon(0.02));
}

TEST_CASE("clipping a stochastic factor can raise the variance") {
    // Z = 1/W multiplies back to the constant 1, so var(Z W) vanishes; the
    // clipped version does not.
    std::mt19937_64 rng(424242);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int reps = 20000;
    std::vector<double> zw(reps), zw_clipped(reps);
    for (int k = 0; k < reps; ++k) {
        double w = nd(rng);
        if (std::abs(w) < 1e-6) w = 1e-6;  // keep Z finite
        const double z = 1.0 / w;
        const double zt = std::clamp(z, -1.0, 1.0);
        zw[static_cast<size_t>(k)] = z * w;
        zw_clipped[static_cast<size_t>(k)] = zt * w;
    }
    auto variance = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double out = 0.0;
        for (double x : v) out += (x - mean) * (x - mean);
        return out / static_cast<double>(v.size() - 1);
    };
    const double var_raw = variance(zw);
    const double var_clipped = variance(zw_clipped);
    REQUIRE(var_raw <= 1e-30);
    REQUIRE(var_clipped > 1e-2);
    REQUIRE(var_raw < var_clipped);
}
