#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pai/dataset.hpp"
#include "pai/random.hpp"
#include "pai/report.hpp"

namespace pai {

/// How the residual integral handles the segments outside the extreme
/// labeled positions.
enum class BoundaryPolicy {
  kAuto,                      // constant extension at degree 1, else polynomial
  kConstantExtension,         // nearest-neighbor / trapezoid form
  kPolynomialExtrapolation,   // boundary blocks integrate their interpolant
};

struct QuadratureConfig {
  int degree = 1;
  /// sup |r^(p+1)|; for degree 1 this is the second-derivative bound L2.
  std::optional<double> deriv_bound;
  /// First-derivative bound L1, required by the degree-1 boundary remainder.
  std::optional<double> deriv_bound_first;
  BoundaryPolicy boundary = BoundaryPolicy::kAuto;
  /// Map labeled features to [0,1] through the empirical CDF of the
  /// unlabeled features before integrating.
  bool use_pit = true;
};

/// Sorted labeled positions in [0,1] plus the n+1 spacings to the domain
/// endpoints. Duplicate positions are nudged apart by the smallest
/// representable step so interpolation nodes stay distinct.
struct SpacingProfile {
  std::vector<double> positions;
  std::vector<double> gaps;  // size positions.size() + 1
  int perturbed = 0;
};

/// Nearest labeled index (ties to the lower original index) for each query.
std::vector<std::size_t> nearest_labeled_indices(
    std::span<const double> labeled_x, std::span<const double> queries);

/// Univariate nearest-neighbor residual imputation:
/// (1/N) sum [f(x~) + r(nearest labeled)].
double paq_nn_estimate(std::span<const LabeledSample> labeled,
                       std::span<const UnlabeledSample> unlabeled);

/// Closed-form residual-correction term of the nearest-neighbor estimator
/// under a dense uniform unlabeled sample: u_1 r_1 + sum gap*(r_i+r_{i+1})/2
/// + (1-u_n) r_n. Positions must be sorted and inside [0,1].
double paq_trapezoid_form(std::span<const double> positions,
                          std::span<const double> residual_values);

/// Degree-p blocked interpolation of the residual integral over [0,1]:
/// consecutive blocks of p+1 order statistics sharing endpoints, boundary
/// blocks extended to 0 and 1, each integrated in closed form from its
/// Newton divided-difference representation. Requires n >= 2p+2.
double paq_degree_p_residual_term(std::span<const double> positions,
                                  std::span<const double> residual_values,
                                  int degree);

/// Full degree-p estimate: mean unlabeled prediction plus the residual term
/// computed on PIT (or raw) positions.
double paq_degree_p_estimate(std::span<const LabeledSample> labeled,
                             std::span<const UnlabeledSample> unlabeled,
                             const QuadratureConfig& cfg);

/// Positions of the labeled features under the empirical CDF of the
/// unlabeled features.
SpacingProfile pit_positions(std::span<const double> labeled_x,
                             std::span<const double> unlabeled_x);

/// Conservative interval: Wald term for the unlabeled average plus the
/// deterministic worst-case quadrature remainder from the supplied
/// derivative bounds.
EstimateReport paq_ci(std::span<const LabeledSample> labeled,
                      std::span<const UnlabeledSample> unlabeled,
                      const QuadratureConfig& cfg, double alpha);

struct RateRow {
  int n = 0;
  double mean_bias = 0.0;
  double variance = 0.0;
};

struct RateProbeResult {
  std::vector<RateRow> rows;
  double bias_slope = 0.0;      // log|bias| vs log n
  double variance_slope = 0.0;  // log var  vs log n
};

/// Monte Carlo bias/variance of the residual-term estimator on uniform
/// positions for each n in the grid, with least-squares log-log slopes.
RateProbeResult rate_probe(const std::function<double(double)>& residual,
                           double residual_integral, int degree,
                           std::span<const int> n_grid, int replications,
                           std::uint64_t seed);

void write_rate_probe_csv(const RateProbeResult& result,
                          const std::string& path);

}  // namespace pai
