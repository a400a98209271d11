#include "sls/estimation.hpp"

#include <cmath>
#include <string>

#include "sls/errors.hpp"
#include "sls/linalg.hpp"
#include "sls/special_functions.hpp"

namespace sls {

BlockEstimate block_ls(const SlsBlock& block, int p, VarianceConvention convention) {
    if (p < 1) throw ConfigError("block_ls requires p >= 1");
    const std::int64_t len = block.length();
    if (len < 1) throw DataError("block_ls: empty block");
    if (block.values.size() != static_cast<std::size_t>(len + p)) {
        throw DataError("block_ls: block carries " + std::to_string(block.values.size()) +
                        " values, expected p + length = " + std::to_string(len + p));
    }

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd z(p);
    for (std::int64_t row = 0; row < len; ++row) {
        const std::size_t x_idx = static_cast<std::size_t>(p + row);
        for (int k = 0; k < p; ++k) z(k) = block.values[x_idx - 1 - static_cast<std::size_t>(k)];
        gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
        xty += z * block.values[x_idx];
    }
    gram = gram.selfadjointView<Eigen::Lower>();

    const auto pv = pinv_psd(gram);
    BlockEstimate est;
    est.beta_hat = pv.pinv * xty;
    est.gram = gram;
    est.block_len = len;
    est.info_trace = gram.trace();
    est.degenerate = pv.rank < p || len < p;

    double rss = 0.0;
    for (std::int64_t row = 0; row < len; ++row) {
        const std::size_t x_idx = static_cast<std::size_t>(p + row);
        double fitted = 0.0;
        for (int k = 0; k < p; ++k) {
            fitted += est.beta_hat(k) * block.values[x_idx - 1 - static_cast<std::size_t>(k)];
        }
        const double r = block.values[x_idx] - fitted;
        rss += r * r;
    }
    const std::int64_t denom = (convention == VarianceConvention::unbiased)
                                   ? std::max<std::int64_t>(len - p, 1)
                                   : len;
    est.sigma_hat_sq = rss / static_cast<double>(denom);
    return est;
}

Eigen::VectorXd normalized_error(const BlockEstimate& est, const Eigen::VectorXd& beta_true) {
    if (beta_true.size() != est.beta_hat.size()) {
        throw ConfigError("normalized_error: coefficient dimension mismatch");
    }
    return sqrt_psd(est.gram) * (est.beta_hat - beta_true);
}

double pivot_chi2(const BlockEstimate& est, const Eigen::VectorXd& beta_ref, double sigma_sq) {
    if (!(sigma_sq > 0.0)) throw ConfigError("pivot_chi2 requires sigma_sq > 0");
    if (beta_ref.size() != est.beta_hat.size()) {
        throw ConfigError("pivot_chi2: coefficient dimension mismatch");
    }
    const Eigen::VectorXd diff = est.beta_hat - beta_ref;
    return diff.dot(est.gram * diff) / sigma_sq;
}

bool ConfidenceRegion::contains(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd diff = beta - center;
    return diff.dot(shape * diff) <= radius_sq;
}

ConfidenceRegion confidence_region(const BlockEstimate& est, double d, double alpha) {
    if (!(d > 0.0)) throw ConfigError("confidence_region requires d > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("confidence_region requires alpha in (0, 1)");
    }
    ConfidenceRegion region;
    region.center = est.beta_hat;
    region.shape = est.gram;
    region.radius_sq = d * d * est.info_trace;
    region.level = 1.0 - alpha;
    return region;
}

double threshold_for_width(double sigma_sq, double alpha, double d, int p) {
    if (!(sigma_sq > 0.0)) throw ConfigError("threshold_for_width requires sigma_sq > 0");
    if (!(d > 0.0)) throw ConfigError("threshold_for_width requires d > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("threshold_for_width requires alpha in (0, 1)");
    }
    const double a_sq = chi2_quantile(p, 1.0 - alpha);
    return sigma_sq * a_sq / (d * d);
}

Interval ar1_interval(const BlockEstimate& est, double c, double sigma, double alpha) {
    if (est.beta_hat.size() != 1) {
        throw ConfigError("ar1_interval is defined for scalar estimates only");
    }
    if (!(c > 0.0) || !(sigma > 0.0)) {
        throw ConfigError("ar1_interval requires c > 0 and sigma > 0");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("ar1_interval requires alpha in (0, 1)");
    }
    const double half = sigma * normal_quantile(1.0 - alpha) / std::sqrt(c);
    return Interval{est.beta_hat(0) - half, est.beta_hat(0) + half};
}

}  // namespace sls
