#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pai/dataset.hpp"
#include "pai/report.hpp"

namespace pai {

/// Axis-aligned box, half-open on the split side: x belongs iff
/// lower_k < x_k <= upper_k for every coordinate (the root covers all of
/// space via infinite bounds).
struct Region {
  std::vector<double> lower;
  std::vector<double> upper;

  static Region whole(int dim);
  bool contains(std::span<const double> x) const;
};

struct SplitRule {
  int coord = 0;        // 0-based
  double threshold = 0.0;
};

struct LeafStats {
  Region region;
  std::size_t n_leaf = 0;
  double mean_residual = 0.0;
  double var_residual = 0.0;
  double mass = 0.0;  // unlabeled fraction
};

struct TreeNode {
  // internal node iff split is set; leaf otherwise
  std::optional<SplitRule> split;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
  std::optional<LeafStats> leaf;

  bool is_leaf() const { return !split.has_value(); }
};

struct Tree {
  std::unique_ptr<TreeNode> root;
  int depth_limit = 0;
  int min_leaf = 2;
  int leaf_count = 0;

  std::vector<const LeafStats*> leaves() const;
  /// Human-readable nested dump (CLI --dump-tree).
  std::string dump() const;
};

struct TreeOptions {
  int max_depth = 0;
  int min_leaf = 2;
  /// Stop a node early when no candidate improves on its own variance term.
  /// Off by default so the default build matches the plain depth/min-size
  /// termination rule.
  bool early_stop = false;
  /// Candidate thresholds from the full unlabeled pool instead of the
  /// node's region.
  bool global_candidates = false;
};

/// Midpoints between consecutive nearest-rank quantiles of the given
/// coordinate values at levels 1/n..(n-1)/n, deduplicated and sorted.
/// May be empty (constant coordinate). Requires n >= 3.
std::vector<double> candidate_splits(std::span<const double> values, int n);

struct VmsResult {
  bool feasible = false;
  double value = 0.0;
};

using MassFn = std::function<double(const Region&)>;

/// Variance of Mixture of Splits for a single candidate split of `region`:
/// p_L^2 s_L^2 / n_L + p_R^2 s_R^2 / n_R over the labeled points inside the
/// region. Infeasible when either side has fewer than max(min_leaf, 2)
/// labeled points.
VmsResult vms(const SplitRule& split, const Region& region,
              std::span<const LabeledSample> labeled, const MassFn& mass_fn,
              int min_leaf);

/// Greedy VMS tree construction. Ties in the argmin break toward the
/// lexicographically smallest (coord, threshold).
Tree build_tree(const Dataset& ds, const TreeOptions& opts);

struct PartMeanResult {
  EstimateReport report;
  Tree tree;
};

/// Tree-partitioned mean estimate with Wald interval: mean unlabeled
/// prediction plus mass-weighted per-leaf residual corrections.
PartMeanResult part_mean_ci(const Dataset& ds, const TreeOptions& opts,
                            double alpha);

/// Additive finite-sample coverage penalty for a tree restricted to L
/// leaves: sqrt(2 L log(d n) / n) + (n d)^{-L}.
double coverage_correction(int leaf_cap, std::size_t n, int dim);

}  // namespace pai
