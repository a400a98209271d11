#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sls/errors.hpp"
#include "sls/estimation.hpp"
#include "sls/rng.hpp"
#include "sls/special_functions.hpp"

using namespace sls;

namespace {

// ---- independent oracles ------------------------------------------------

// Chi-square CDF by Simpson quadrature of the density, independent of the
// incomplete-gamma implementation under test. The substitution x = u^2
// removes the dof = 1 singularity at the origin.
double chi2_cdf_oracle(int dof, double x) {
    const double k = static_cast<double>(dof);
    const double log_norm = -0.5 * k * std::log(2.0) - std::lgamma(0.5 * k);
    auto integrand = [&](double u) {
        // f(u^2) * 2u = 2 u^{k-1} e^{-u^2/2} * norm, finite at u = 0.
        if (u == 0.0) return (dof == 1) ? 2.0 * std::exp(log_norm) : 0.0;
        return 2.0 * std::exp(log_norm + (k - 1.0) * std::log(u) - 0.5 * u * u);
    };
    const double b = std::sqrt(x);
    const int n = 20'000;  // composite Simpson, n even
    const double h = b / n;
    double sum = integrand(0.0) + integrand(b);
    for (int i = 1; i < n; ++i) {
        sum += integrand(i * h) * ((i % 2) ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

// Inverse-Phi oracle: bisection on the erfc-based CDF.
double normal_quantile_oracle(double prob) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid * M_SQRT1_2) < prob) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Dense normal-equations oracle: materialize Gamma and solve by SVD.
Eigen::VectorXd dense_ls_oracle(const SlsBlock& block, int p) {
    const auto len = static_cast<Eigen::Index>(block.length());
    Eigen::MatrixXd gamma(len, p);
    Eigen::VectorXd x(len);
    for (Eigen::Index row = 0; row < len; ++row) {
        const auto x_idx = static_cast<std::size_t>(p + row);
        x(row) = block.values[x_idx];
        for (int k = 0; k < p; ++k) {
            gamma(row, k) = block.values[x_idx - 1 - static_cast<std::size_t>(k)];
        }
    }
    return gamma.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(x);
}

SlsBlock make_block(std::vector<double> values, int p) {
    SlsBlock b;
    b.start = p + 1;
    b.stop = static_cast<std::int64_t>(values.size());
    b.values = std::move(values);
    b.acc_info = 0.0;
    return b;
}

Eigen::VectorXd vec(std::initializer_list<double> v) { return test::coeffs(v); }

}  // namespace

TEST_CASE("exact proportional block") {
    // pairs (1,2), (2,4)
    const auto est = block_ls(make_block({1.0, 2.0, 4.0}, 1), 1);
    CHECK(est.beta_hat(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(est.sigma_hat_sq == doctest::Approx(0.0));
    CHECK(est.gram(0, 0) == doctest::Approx(5.0));
    CHECK(est.block_len == 2);
    CHECK(!est.degenerate);
}

TEST_CASE("two-row block with residuals, unbiased variance") {
    // pairs (1,1), (1,3): beta = 2, residuals -1 and +1, denominator 1.
    const auto est = block_ls(make_block({1.0, 1.0, 3.0}, 1), 1);
    CHECK(est.beta_hat(0) == doctest::Approx(2.0));
    CHECK(est.sigma_hat_sq == doctest::Approx(2.0));
}

TEST_CASE("info trace equals the accumulated information") {
    const auto est = block_ls(make_block({1.0, 2.0, 4.0, 5.0}, 1), 1);
    CHECK(est.info_trace == doctest::Approx(1.0 + 4.0 + 16.0).epsilon(1e-12));
}

TEST_CASE("block_ls matches the dense SVD oracle on random blocks") {
    CounterRng rng(321);
    for (int trial = 0; trial < 300; ++trial) {
        const int p = 1 + static_cast<int>(rng.next_u64() % 5);
        const auto len = static_cast<std::int64_t>(1 + rng.next_u64() % 200);
        std::vector<double> values;
        for (std::int64_t i = 0; i < len + p; ++i) values.push_back(rng.gaussian());
        SlsBlock b = make_block(values, p);
        b.stop = b.start + len - 1;

        const auto est = block_ls(b, p);
        const auto oracle = dense_ls_oracle(b, p);
        const double denom = std::max(1.0, oracle.norm());
        CHECK((est.beta_hat - oracle).norm() / denom < 1e-8);
    }
}

TEST_CASE("degenerate blocks flag rank deficiency and keep the minimum norm") {
    // One row at p = 2: rank 1 Gram.
    const auto est = block_ls(make_block({1.0, 2.0, 3.0}, 2), 2);
    CHECK(est.degenerate);
    // Minimum-norm solution still reproduces the row.
    CHECK(2.0 * est.beta_hat(0) + 1.0 * est.beta_hat(1) == doctest::Approx(3.0));
}

TEST_CASE("normalized error basics") {
    BlockEstimate est;
    est.beta_hat = vec({0.5});
    est.gram = 9.0 * Eigen::MatrixXd::Identity(1, 1);
    est.sigma_hat_sq = 1.0;
    est.block_len = 10;
    est.info_trace = 9.0;

    CHECK(normalized_error(est, vec({0.5})).norm() == 0.0);
    CHECK(normalized_error(est, vec({0.0}))(0) == doctest::Approx(1.5));
}

TEST_CASE("pivot basics and identities") {
    BlockEstimate est;
    est.beta_hat = vec({1.0});
    est.gram = 4.0 * Eigen::MatrixXd::Identity(1, 1);
    est.sigma_hat_sq = 1.0;
    est.block_len = 10;
    est.info_trace = 4.0;

    CHECK(pivot_chi2(est, vec({1.0}), 1.0) == 0.0);
    CHECK(pivot_chi2(est, vec({0.5}), 1.0) == doctest::Approx(1.0));

    // ||normalized_error||^2 / sigma^2 == pivot
    CounterRng rng(999);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 2 + static_cast<int>(rng.next_u64() % 3);
        Eigen::MatrixXd a(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) a(i, j) = rng.gaussian();
        BlockEstimate e;
        e.gram = a.transpose() * a;
        e.beta_hat = Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) { return rng.gaussian(); });
        Eigen::VectorXd ref =
            Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) { return rng.gaussian(); });
        const double sigma_sq = 0.25 + rng.uniform();
        const double lhs = normalized_error(e, ref).squaredNorm() / sigma_sq;
        const double rhs = pivot_chi2(e, ref, sigma_sq);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("pivot is invariant under orthogonal basis changes") {
    CounterRng rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const int p = 3;
        Eigen::MatrixXd a(p, p), m(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                a(i, j) = rng.gaussian();
                m(i, j) = rng.gaussian();
            }
        const Eigen::MatrixXd q =
            Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
        BlockEstimate e;
        e.gram = a.transpose() * a;
        e.beta_hat = Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) { return rng.gaussian(); });
        Eigen::VectorXd ref =
            Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) { return rng.gaussian(); });

        BlockEstimate rotated;
        rotated.gram = q * e.gram * q.transpose();
        rotated.beta_hat = q * e.beta_hat;
        const double base = pivot_chi2(e, ref, 1.0);
        const double rot = pivot_chi2(rotated, Eigen::VectorXd(q * ref), 1.0);
        CHECK(base == doctest::Approx(rot).epsilon(1e-9));
    }
}

TEST_CASE("chi-square quantiles validated by quadrature") {
    // Oracle first: the quadrature CDF confirms the frozen 95% points.
    CHECK(chi2_cdf_oracle(1, 3.841459) == doctest::Approx(0.95).epsilon(1e-5));
    CHECK(chi2_cdf_oracle(2, 5.991465) == doctest::Approx(0.95).epsilon(1e-5));

    CHECK(chi2_quantile(1, 0.95) == doctest::Approx(3.841459).epsilon(1e-3 / 3.841459));
    CHECK(std::abs(chi2_quantile(1, 0.95) - 3.841459) < 1e-3);
    // Closed form for dof 2: -2 ln(1 - p).
    CHECK(std::abs(chi2_quantile(2, 0.95) - (-2.0 * std::log(0.05))) < 1e-3);

    for (int dof = 1; dof <= 20; ++dof) {
        for (double prob : {0.01, 0.1, 0.5, 0.9, 0.95, 0.999}) {
            CHECK(std::abs(chi2_cdf(dof, chi2_quantile(dof, prob)) - prob) < 1e-6);
        }
    }
    CHECK_THROWS_AS(chi2_quantile(1, 0.0), ConfigError);
    CHECK_THROWS_AS(chi2_quantile(1, 1.0), ConfigError);
    CHECK_THROWS_AS(chi2_quantile(0, 0.5), ConfigError);
}

TEST_CASE("normal quantile against the erfc bisection oracle") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(std::abs(normal_quantile(0.975) - 1.959964) < 1e-5);
    for (double prob : {0.001, 0.025, 0.1, 0.3, 0.7, 0.9, 0.975, 0.999}) {
        CHECK(std::abs(normal_quantile(prob) - normal_quantile_oracle(prob)) < 1e-7);
        CHECK(std::abs(normal_cdf(normal_quantile(prob)) - prob) < 1e-9);
    }
    for (double prob : {0.9, 0.99, 0.999}) {
        CHECK(normal_quantile(prob) == doctest::Approx(-normal_quantile(1.0 - prob)));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), ConfigError);
    CHECK_THROWS_AS(normal_quantile(1.0), ConfigError);
}

TEST_CASE("confidence region geometry") {
    BlockEstimate est;
    est.beta_hat = vec({0.3});
    est.gram = 100.0 * Eigen::MatrixXd::Identity(1, 1);
    est.info_trace = 100.0;
    est.sigma_hat_sq = 1.0;
    est.block_len = 50;

    const auto region = confidence_region(est, 0.1, 0.05);
    CHECK(region.contains(est.beta_hat));
    CHECK(region.level == doctest::Approx(0.95));
    // Scalar case: half-width sqrt(d^2 tr / gram) = d.
    CHECK(region.contains(vec({0.3 + 0.0999})));
    CHECK(!region.contains(vec({0.3 + 0.1001})));

    // Scaling the gram leaves the scalar region invariant.
    BlockEstimate scaled = est;
    scaled.gram *= 7.0;
    scaled.info_trace *= 7.0;
    const auto region2 = confidence_region(scaled, 0.1, 0.05);
    CHECK(region2.radius_sq == doctest::Approx(7.0 * region.radius_sq));
    CHECK(region2.contains(vec({0.3 + 0.0999})));
    CHECK(!region2.contains(vec({0.3 + 0.1001})));
}

TEST_CASE("threshold for a fixed-width region") {
    const double c = threshold_for_width(1.0, 0.05, 0.1, 1);
    CHECK(std::abs(c - 384.15) < 0.1);
    CHECK(threshold_for_width(1.0, 0.05, 0.05, 1) == doctest::Approx(4.0 * c).epsilon(1e-12));
    CHECK(threshold_for_width(2.0, 0.05, 0.1, 1) == doctest::Approx(2.0 * c).epsilon(1e-12));
}

TEST_CASE("AR(1) interval width") {
    BlockEstimate est;
    est.beta_hat = vec({0.42});
    est.gram = Eigen::MatrixXd::Identity(1, 1);
    est.block_len = 10;
    est.info_trace = 1.0;

    const auto iv = ar1_interval(est, 1e4, 1.0, 0.025);
    const double half = 0.5 * (iv.hi - iv.lo);
    CHECK(std::abs(half - 0.0196) < 1e-4);
    CHECK(0.5 * (iv.hi + iv.lo) == doctest::Approx(0.42));

    const auto degenerate = ar1_interval(est, 1e4, 1.0, 0.5);
    CHECK(degenerate.lo == doctest::Approx(degenerate.hi));

    const auto tighter = ar1_interval(est, 1e8, 1.0, 0.025);
    CHECK(tighter.hi - tighter.lo < iv.hi - iv.lo);

    BlockEstimate est2;
    est2.beta_hat = vec({0.1, 0.2});
    est2.gram = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(ar1_interval(est2, 100.0, 1.0, 0.05), ConfigError);
}
