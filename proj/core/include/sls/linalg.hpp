#pragma once

#include <Eigen/Dense>

namespace sls {

/// Relative eigenvalue cutoff shared by every pseudoinverse in the
/// pipeline. Eigenvalues below tol * lambda_max are treated as zero.
inline constexpr double kPinvRelTol = 1e-12;

struct PsdPinvResult {
    Eigen::MatrixXd pinv;
    int rank = 0;            // eigenvalues kept
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

/// Moore-Penrose inverse of a symmetric PSD matrix via eigendecomposition
/// with relative truncation. Result is symmetrized.
PsdPinvResult pinv_psd(const Eigen::MatrixXd& m, double rel_tol = kPinvRelTol);

/// Symmetric PSD square root via eigendecomposition. Negative rounding
/// noise in the spectrum is clamped to zero.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// Largest root modulus of z^p - c1 z^{p-1} - ... - cp, computed from the
/// companion matrix spectrum.
double max_root_modulus(const Eigen::VectorXd& coeffs);

}  // namespace sls
