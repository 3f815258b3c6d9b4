#pragma once

#include <string>

namespace pai {

/// Every estimator's return contract: a point estimate with a Wald interval
/// [estimate - half_width, estimate + half_width] where
/// half_width = z_{1-alpha/2} * sqrt(variance_estimate).
struct EstimateReport {
  double estimate = 0.0;
  double half_width = 0.0;
  double alpha = 0.05;
  std::string method;
  double variance_estimate = 0.0;
  std::size_t n_used = 0;
  std::size_t N_used = 0;
  int leaf_count = 0;  // tree methods only; 0 otherwise

  double lower() const { return estimate - half_width; }
  double upper() const { return estimate + half_width; }
  bool contains(double value) const {
    return value >= lower() && value <= upper();
  }
};

/// Builds a report with the Wald half-width from the variance estimate.
EstimateReport make_wald_report(double estimate, double variance_estimate,
                                double alpha, std::string method,
                                std::size_t n_used, std::size_t N_used);

}  // namespace pai
