#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pai {

/// Standard normal CDF.
double normal_cdf(double z);

/// Inverse standard normal CDF. |Phi(result) - p| <= 1e-9 on (0, 1).
/// Throws ArgumentError outside (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> values);

/// Unbiased sample variance (size-1 denominator). Throws DataError for
/// fewer than two values.
double sample_variance(std::span<const double> values);

/// Sample covariance with size-1 denominator.
double sample_covariance(std::span<const double> a, std::span<const double> b);

/// Nearest-rank empirical quantiles at levels j/n, j = 1..n-1: the order
/// statistic at 1-based index ceil(j*|values|/n). Output has length n-1 and
/// is nondecreasing.
std::vector<double> empirical_quantiles(std::span<const double> values, int n);

/// Right-continuous empirical CDF: F(x) = (#knots <= x) / (#knots).
class StepCdf {
 public:
  explicit StepCdf(std::vector<double> values);

  double operator()(double x) const;
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;  // sorted
};

}  // namespace pai
