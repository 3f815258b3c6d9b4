#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pai/dataset.hpp"
#include "pai/paq.hpp"
#include "pai/part_mean.hpp"

namespace pai {

enum class GeneratorTag {
  kSineResidual,          // x ~ U[0,pi], f = x^2, y = x^2 + sin(x) + sigma*z
  kHeteroscedasticBinary, // x = +-1 equiprobable, f = 0, y | x ~ N(x, 1)
  kLinearIncome,          // (sex, age) features, linear income, noise by sex
};

struct SyntheticSpec {
  GeneratorTag tag = GeneratorTag::kSineResidual;
  double sigma = 0.0;  // label noise level for sine-residual
};

/// Fully labeled pool of size M, deterministic in (seed, stream).
Dataset synth_generate(const SyntheticSpec& spec, std::size_t M,
                       std::uint64_t seed, std::uint64_t stream = 0);

/// Analytic mean of the outcome under the generator.
double synth_truth_mean(const SyntheticSpec& spec);

/// Population OLS coefficients for the linear-income generator.
std::vector<double> linear_income_theta();

struct MethodSpec {
  enum class Kind {
    kEmpirical,
    kPpi,
    kPpiPp,
    kPart,
    kCoordPartition,
    kPaq,
    kPartOls,
  };
  Kind kind = Kind::kEmpirical;
  std::string name;        // row label in the output table
  TreeOptions tree;        // part / part_ols
  int coord = 0;           // coord_partition group / part_ols target
  QuadratureConfig quad;   // paq
  /// Per-method estimand override (e.g. a coefficient instead of the mean).
  std::optional<double> truth_override;
};

MethodSpec make_method(MethodSpec::Kind kind, std::string name = "");

struct SimConfig {
  std::vector<MethodSpec> methods;
  std::vector<std::size_t> n_grid;
  int replications = 100;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int jobs = 1;

  /// Synthetic source: a fresh pool of `pool_size` rows per replication.
  std::optional<SyntheticSpec> synthetic;
  std::size_t pool_size = 0;
  /// CSV source: a fixed fully labeled pool; the sweep obfuscates it.
  std::optional<Dataset> pool;
  /// Mean estimand; defaults to the analytic synthetic truth or the full
  /// pool label mean.
  std::optional<double> truth;
};

struct SimRow {
  std::size_t n = 0;
  std::string method;
  double mean_width = 0.0;
  double sd_width = 0.0;
  double coverage = 0.0;
  double mean_estimate = 0.0;
  int valid = 0;  // replications that produced a report (rest were NA)
};

struct SimResult {
  std::vector<SimRow> rows;
};

/// One replication sweep: for each n and replication, obfuscate the pool
/// with stream (n << 32) | rep, run every method, and aggregate widths and
/// truth containment. Method precondition failures become NA cells.
SimResult run_sweep(const SimConfig& cfg);

struct BoundRow {
  std::size_t n = 0;
  int leaf_cap = 0;
  double coverage = 0.0;
  double bound = 0.0;  // 1 - alpha - correction(leaf_cap, n, d)
};

/// Empirical tree-estimator coverage against the finite-sample theoretical
/// lower bound, per (n, leaf cap); the tree depth is the smallest depth
/// admitting leaf_cap leaves.
std::vector<BoundRow> coverage_vs_bound(const SimConfig& cfg,
                                        std::vector<int> leaf_caps);

/// n,method,mean_width,sd_width,coverage,mean_estimate with 12 significant
/// digits; failed cells print NA.
void write_sim_csv(const SimResult& result, const std::string& path);

/// Plot-data files <prefix>_width_vs_n.csv and <prefix>_coverage_vs_n.csv.
void write_plot_data(const SimResult& result, const std::string& prefix);

}  // namespace pai
