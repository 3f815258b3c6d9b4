#pragma once

#include <span>

#include "pai/dataset.hpp"
#include "pai/report.hpp"

namespace pai {

struct LambdaEstimate {
  double lambda = 0.0;
  double cov_yf = 0.0;
  double pooled_var_f = 0.0;
  double ratio = 0.0;  // n / N
};

/// Classical sample-mean estimator over the labeled outcomes.
EstimateReport empirical_mean_ci(std::span<const LabeledSample> labeled,
                                 double alpha);

/// Unlabeled prediction mean plus the global residual correction. The
/// variance estimate carries a var(f)/N term so the interval stays honest
/// at small N.
EstimateReport ppi_mean_ci(std::span<const LabeledSample> labeled,
                           std::span<const UnlabeledSample> unlabeled,
                           double alpha);

/// Power-tuning coefficient: Cov_n(y, f) / ((1 + n/N) * pooled Var(f)).
/// Throws NumericError when the pooled prediction variance vanishes.
LambdaEstimate ppi_lambda(std::span<const LabeledSample> labeled,
                          std::span<const UnlabeledSample> unlabeled);

EstimateReport ppi_pp_mean_ci(std::span<const LabeledSample> labeled,
                              std::span<const UnlabeledSample> unlabeled,
                              double alpha);

/// Same, with the tuning coefficient pinned (for the lambda = 0 / 1
/// reduction identities).
EstimateReport ppi_pp_mean_ci_fixed_lambda(
    std::span<const LabeledSample> labeled,
    std::span<const UnlabeledSample> unlabeled, double lambda, double alpha);

/// Group-specific residual correction over a binary coordinate: mean
/// unlabeled prediction plus sum over groups of p_hat * mean residual.
/// The coordinate must take exactly two distinct values across all samples
/// and each group needs at least two labeled points.
EstimateReport coordinate_partition_mean_ci(
    std::span<const LabeledSample> labeled,
    std::span<const UnlabeledSample> unlabeled, int coord, double alpha);

}  // namespace pai
