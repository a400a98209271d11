#pragma once

#include <span>

#include <Eigen/Dense>

namespace sls {

/// Residual-variance denominator. `unbiased` divides the residual sum of
/// squares by (rows - p); `maximum_likelihood` divides by rows.
enum class VarianceConvention { unbiased, maximum_likelihood };

struct ArLsFit {
    Eigen::VectorXd beta;
    double sigma_sq = 0.0;
    Eigen::MatrixXd gram;  // Gamma^T Gamma
    bool degenerate = false;  // Gram numerically rank-deficient
};

/// Least-squares AR(p) fit over a contiguous series. beta solves the
/// normal equations through the truncated-eigenvalue pseudoinverse, so a
/// rank-deficient Gram yields the minimum-norm solution. Throws DataError
/// when series.size() <= p.
ArLsFit fit_ar_ls(std::span<const double> series, int p,
                  VarianceConvention convention = VarianceConvention::unbiased);

/// BIC order selection over p in {1, ..., p_max}. Every candidate is
/// scored on the common window that leaves p_max lags available, so all
/// orders see the identical sample; ties break toward the smaller order.
/// Throws ConfigError when p_max >= n0 - 10.
int select_order_bic(std::span<const double> pilot, int p_max);

/// Precision estimate (Gamma^T Gamma)^+ of the pilot at order p,
/// symmetrized. Throws DataError when the pilot Gram is numerically
/// singular (message carries the smallest eigenvalue).
Eigen::MatrixXd estimate_precision(std::span<const double> pilot, int p);

struct PilotModel {
    int order = 0;
    Eigen::MatrixXd precision;  // Omega_hat from the pilot Gram
    Eigen::VectorXd beta0;
    double sigma0_sq = 0.0;
    std::int64_t n0 = 0;
};

/// Pilot initialization: BIC order selection, LS coefficients and
/// innovation variance, precision matrix. Enforces n0 > 10 * order.
PilotModel build_pilot(std::span<const double> pilot, int p_max,
                       VarianceConvention convention = VarianceConvention::unbiased);

/// Pilot at a caller-fixed order (no BIC step). Used by experiments that
/// study a known process.
PilotModel build_pilot_fixed_order(std::span<const double> pilot, int p,
                                   VarianceConvention convention = VarianceConvention::unbiased);

/// Mean of min(z^T Omega z, 1) over the pilot regressors: the default
/// start probability of the uniform baseline, chosen so both samplers
/// share the expected start rate.
double mean_capped_leverage(std::span<const double> pilot, const PilotModel& model);

}  // namespace sls
