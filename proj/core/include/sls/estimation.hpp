#pragma once

#include <Eigen/Dense>

#include "sls/pilot.hpp"
#include "sls/sampler.hpp"

namespace sls {

struct BlockEstimate {
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd gram;      // Gamma^T Gamma over the block
    double sigma_hat_sq = 0.0;
    std::int64_t block_len = 0;
    double info_trace = 0.0;   // tr(gram) = accumulated ||z||^2
    bool degenerate = false;   // rank-deficient Gram; beta_hat is minimum-norm
};

/// Least squares on one block, using the p pre-start lags the block
/// carries. Never throws on rank deficiency: the pseudoinverse gives the
/// minimum-norm solution and the degenerate flag is set.
BlockEstimate block_ls(const SlsBlock& block, int p,
                       VarianceConvention convention = VarianceConvention::unbiased);

/// (Gamma^T Gamma)^{1/2} (beta_hat - beta), the vector whose coordinates
/// are asymptotically N(0, sigma^2). Symmetric PSD square root.
Eigen::VectorXd normalized_error(const BlockEstimate& est, const Eigen::VectorXd& beta_true);

/// (beta_hat - beta_ref)^T gram (beta_hat - beta_ref) / sigma_sq,
/// asymptotically chi-square with p degrees of freedom.
double pivot_chi2(const BlockEstimate& est, const Eigen::VectorXd& beta_ref, double sigma_sq);

/// Ellipsoid (beta - center)^T shape (beta - center) <= radius_sq with a
/// fixed major axis of length 2d.
struct ConfidenceRegion {
    Eigen::VectorXd center;
    Eigen::MatrixXd shape;   // Gamma^T Gamma
    double radius_sq = 0.0;  // d^2 * tr(shape)
    double level = 0.0;      // 1 - alpha

    bool contains(const Eigen::VectorXd& beta) const;
};

ConfidenceRegion confidence_region(const BlockEstimate& est, double d, double alpha);

/// Information threshold that makes the fixed-width region of half-width
/// d hold level 1 - alpha: c = sigma_sq * a^2 / d^2 with
/// P[chi2_p <= a^2] = 1 - alpha.
double threshold_for_width(double sigma_sq, double alpha, double d, int p);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// AR(1) interval beta_hat +/- c^{-1/2} sigma z_{1-alpha}. ConfigError
/// unless the estimate is scalar.
Interval ar1_interval(const BlockEstimate& est, double c, double sigma, double alpha);

}  // namespace sls
