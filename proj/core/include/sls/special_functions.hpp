#pragma once

namespace sls {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
/// Series expansion for x < a + 1, continued fraction otherwise.
double regularized_gamma_p(double a, double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Chi-square CDF with dof degrees of freedom.
double chi2_cdf(int dof, double x);

/// Inverse standard normal CDF (Wichura's AS 241), |error| < 1e-9.
/// Throws ConfigError unless prob is in (0, 1).
double normal_quantile(double prob);

/// Inverse chi-square CDF: the x with chi2_cdf(dof, x) = prob, solved by
/// Newton steps inside a maintained bracket, |error| < 1e-6. Results are
/// memoized per (dof, prob). Throws ConfigError unless prob is in (0, 1)
/// and dof >= 1.
double chi2_quantile(int dof, double prob);

}  // namespace sls
