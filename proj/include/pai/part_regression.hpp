#pragma once

#include <Eigen/Dense>
#include <span>

#include "pai/dataset.hpp"
#include "pai/part_mean.hpp"
#include "pai/report.hpp"

namespace pai {

/// Second-moment summary of the unlabeled design: Sigma = (1/N) sum x x^T,
/// its inverse, and the prediction-augmented coefficient vector
/// theta = Sigma^{-1} (1/N) sum x f(x).
struct DesignSummary {
  Eigen::MatrixXd sigma_tilde;
  Eigen::MatrixXd sigma_inv;
  Eigen::VectorXd theta_tilde;
  double condition = 0.0;
};

/// Throws NumericError when Sigma is singular or its condition number
/// exceeds 1e12.
DesignSummary design_summary(std::span<const UnlabeledSample> unlabeled);

struct RegionRegressionStats {
  Region region;
  std::size_t n_region = 0;
  Eigen::VectorXd r_hat;   // Sigma^{-1} X^T residual / n_R
  Eigen::MatrixXd m_hat;   // (1/(n_R-1)) sum (res - x^T r_hat)^2 x x^T
  Eigen::MatrixXd v_hat;   // Sigma^{-1} M Sigma^{-1}
  double mass = 0.0;
};

/// Per-region debias vector and sandwich covariance over the labeled points
/// inside `region`. Requires at least d+1 labeled points in the region.
RegionRegressionStats region_regression_stats(
    const Region& region, std::span<const LabeledSample> labeled,
    const DesignSummary& summary);

/// Split criterion targeted at coordinate k: mass^2 * V^(k,k) / n summed
/// over the two children. Infeasible when a child has fewer than
/// max(min_leaf, d+1) labeled points.
VmsResult vms_lr(const SplitRule& split, const Region& region,
                 std::span<const LabeledSample> labeled,
                 const MassFn& mass_fn, const DesignSummary& summary,
                 int target_coord, int min_leaf);

struct PartOlsResult {
  EstimateReport report;
  Tree tree;  // leaves carry residual-mean/var of the projected statistic
  DesignSummary summary;
  std::vector<RegionRegressionStats> leaf_stats;
};

/// Tree-partitioned OLS coefficient estimate for coordinate k with Wald
/// interval; the tree is grown greedily on the regression split criterion
/// with the same candidate-split machinery as the mean estimator.
PartOlsResult part_ols_ci(const Dataset& ds, int target_coord,
                          const TreeOptions& opts, double alpha);

}  // namespace pai
