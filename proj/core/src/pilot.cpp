#include "sls/pilot.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sls/errors.hpp"
#include "sls/linalg.hpp"

namespace sls {

namespace {

// Accumulate Gram and cross moments over rows t = first_row .. n-1
// (0-based): z_t = [x[t-1], ..., x[t-p]], response x[t].
struct Moments {
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    std::int64_t rows = 0;
};

Moments accumulate(std::span<const double> x, int p, std::size_t first_row) {
    Moments m;
    m.gram = Eigen::MatrixXd::Zero(p, p);
    m.xty = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd z(p);
    for (std::size_t t = first_row; t < x.size(); ++t) {
        for (int k = 0; k < p; ++k) z(k) = x[t - 1 - static_cast<std::size_t>(k)];
        m.gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
        m.xty += z * x[t];
        ++m.rows;
    }
    m.gram = m.gram.selfadjointView<Eigen::Lower>();
    return m;
}

double residual_ss(std::span<const double> x, int p, std::size_t first_row,
                   const Eigen::VectorXd& beta) {
    double rss = 0.0;
    for (std::size_t t = first_row; t < x.size(); ++t) {
        double fitted = 0.0;
        for (int k = 0; k < p; ++k) {
            fitted += beta(k) * x[t - 1 - static_cast<std::size_t>(k)];
        }
        const double r = x[t] - fitted;
        rss += r * r;
    }
    return rss;
}

double variance_from_rss(double rss, std::int64_t rows, int p,
                         VarianceConvention convention) {
    const std::int64_t denom = (convention == VarianceConvention::unbiased)
                                   ? std::max<std::int64_t>(rows - p, 1)
                                   : std::max<std::int64_t>(rows, 1);
    return rss / static_cast<double>(denom);
}

}  // namespace

ArLsFit fit_ar_ls(std::span<const double> series, int p, VarianceConvention convention) {
    if (p < 1) throw ConfigError("fit_ar_ls requires p >= 1");
    if (series.size() <= static_cast<std::size_t>(p)) {
        throw DataError("fit_ar_ls: series of length " + std::to_string(series.size()) +
                        " too short for order " + std::to_string(p));
    }
    const auto m = accumulate(series, p, static_cast<std::size_t>(p));
    const auto pv = pinv_psd(m.gram);

    ArLsFit fit;
    fit.beta = pv.pinv * m.xty;
    fit.gram = m.gram;
    fit.degenerate = pv.rank < p;
    const double rss = residual_ss(series, p, static_cast<std::size_t>(p), fit.beta);
    fit.sigma_sq = variance_from_rss(rss, m.rows, p, convention);
    return fit;
}

int select_order_bic(std::span<const double> pilot, int p_max) {
    if (p_max < 1) throw ConfigError("select_order_bic requires p_max >= 1");
    const auto n0 = static_cast<std::int64_t>(pilot.size());
    if (p_max >= n0 - 10) {
        throw ConfigError("select_order_bic: p_max " + std::to_string(p_max) +
                          " too large for pilot of size " + std::to_string(n0));
    }

    // Common scoring window: rows p_max .. n0-1 for every candidate order.
    const auto first_row = static_cast<std::size_t>(p_max);
    const double n_eff = static_cast<double>(n0 - p_max);

    // Residual sums below the fp resolution of the response energy are
    // exact fits; without the floor, rounding noise on a noiseless
    // recursion could prefer a larger order.
    double sum_x_sq = 0.0;
    for (std::size_t t = first_row; t < pilot.size(); ++t) sum_x_sq += pilot[t] * pilot[t];
    const double rss_floor = 1e-24 * sum_x_sq;

    int best_p = 1;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= p_max; ++p) {
        const auto m = accumulate(pilot, p, first_row);
        const Eigen::VectorXd beta = pinv_psd(m.gram).pinv * m.xty;
        const double rss = residual_ss(pilot, p, first_row, beta);
        const double bic = (rss > rss_floor)
                               ? n_eff * std::log(rss / n_eff) + p * std::log(n_eff)
                               : -std::numeric_limits<double>::infinity();
        if (bic < best_bic) {
            best_bic = bic;
            best_p = p;
        }
    }
    return best_p;
}

namespace {

Eigen::MatrixXd precision_from_gram(const Eigen::MatrixXd& gram, int p) {
    const auto pv = pinv_psd(gram);
    if (pv.rank < p) {
        throw DataError("degenerate pilot: Gram matrix numerically singular "
                        "(smallest eigenvalue " +
                        std::to_string(pv.min_eigenvalue) + ", largest " +
                        std::to_string(pv.max_eigenvalue) + ")");
    }
    return pv.pinv;
}

}  // namespace

Eigen::MatrixXd estimate_precision(std::span<const double> pilot, int p) {
    if (p < 1) throw ConfigError("estimate_precision requires p >= 1");
    if (pilot.size() <= static_cast<std::size_t>(p)) {
        throw DataError("estimate_precision: pilot too short for order " + std::to_string(p));
    }
    const auto m = accumulate(pilot, p, static_cast<std::size_t>(p));
    return precision_from_gram(m.gram, p);
}

namespace {

PilotModel finish_pilot(std::span<const double> pilot, int p,
                        VarianceConvention convention) {
    const auto n0 = static_cast<std::int64_t>(pilot.size());
    if (n0 <= 10 * static_cast<std::int64_t>(p)) {
        throw ConfigError("pilot of size " + std::to_string(n0) +
                          " below the identifiability margin 10*p for order " +
                          std::to_string(p));
    }
    const ArLsFit fit = fit_ar_ls(pilot, p, convention);
    PilotModel model;
    model.order = p;
    model.beta0 = fit.beta;
    model.sigma0_sq = fit.sigma_sq;
    model.n0 = n0;
    model.precision = precision_from_gram(fit.gram, p);
    if (!(model.sigma0_sq > 0.0)) {
        throw DataError("degenerate pilot: zero residual variance");
    }
    return model;
}

}  // namespace

PilotModel build_pilot(std::span<const double> pilot, int p_max,
                       VarianceConvention convention) {
    return finish_pilot(pilot, select_order_bic(pilot, p_max), convention);
}

PilotModel build_pilot_fixed_order(std::span<const double> pilot, int p,
                                   VarianceConvention convention) {
    if (p < 1) throw ConfigError("pilot order must be >= 1");
    return finish_pilot(pilot, p, convention);
}

double mean_capped_leverage(std::span<const double> pilot, const PilotModel& model) {
    const int p = model.order;
    if (pilot.size() <= static_cast<std::size_t>(p)) {
        throw DataError("mean_capped_leverage: pilot too short");
    }
    Eigen::VectorXd z(p);
    double sum = 0.0;
    std::int64_t rows = 0;
    for (std::size_t t = static_cast<std::size_t>(p); t < pilot.size(); ++t) {
        for (int k = 0; k < p; ++k) z(k) = pilot[t - 1 - static_cast<std::size_t>(k)];
        const double h = z.dot(model.precision * z);
        sum += std::min(h, 1.0);
        ++rows;
    }
    return sum / static_cast<double>(rows);
}

}  // namespace sls
