#pragma once

#include <span>

namespace btcg::stats {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly
/// in the tail to keep small p-values accurate.
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

double normal_cdf(double x);
/// P(|Z| > |z|) for standard normal Z.
double normal_two_sided_p(double z);
/// Inverse standard normal CDF on (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> x);
/// Population variance (divides by n).
double variance(std::span<const double> x);

}  // namespace btcg::stats
