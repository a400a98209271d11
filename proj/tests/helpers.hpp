#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sls/series.hpp"

namespace sls::test {

inline Eigen::VectorXd coeffs(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

inline ArProcessSpec gaussian_ar(std::initializer_list<double> beta, double sigma,
                                 std::uint64_t seed, std::int64_t burn_in = 500) {
    ArProcessSpec spec;
    spec.coeffs = coeffs(beta);
    spec.innovation = GaussianInnovation{sigma};
    spec.burn_in = burn_in;
    spec.seed = seed;
    return spec;
}

}  // namespace sls::test
