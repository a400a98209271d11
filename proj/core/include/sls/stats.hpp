#pragma once

#include <functional>
#include <vector>

namespace sls {

struct KsResult {
    double statistic = 0.0;  // sup |F_n - F|
    double p_value = 1.0;    // asymptotic Kolmogorov tail
    std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> values, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_tail(double lambda);

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);
double median(std::vector<double> v);

}  // namespace sls
