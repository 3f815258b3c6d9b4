#include "pai/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "pai/errors.hpp"
#include "pai/stats.hpp"

namespace pai {

EstimateReport make_wald_report(double estimate, double variance_estimate,
                                double alpha, std::string method,
                                std::size_t n_used, std::size_t N_used) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ArgumentError("alpha must lie in (0, 1)");
  if (variance_estimate < 0.0) variance_estimate = 0.0;
  EstimateReport r;
  r.estimate = estimate;
  r.variance_estimate = variance_estimate;
  r.alpha = alpha;
  r.method = std::move(method);
  r.half_width = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(variance_estimate);
  r.n_used = n_used;
  r.N_used = N_used;
  return r;
}

namespace {

std::vector<double> outcomes(std::span<const LabeledSample> labeled) {
  std::vector<double> y;
  y.reserve(labeled.size());
  for (const auto& s : labeled) y.push_back(s.y);
  return y;
}

std::vector<double> residuals(std::span<const LabeledSample> labeled) {
  std::vector<double> r;
  r.reserve(labeled.size());
  for (const auto& s : labeled) r.push_back(s.residual());
  return r;
}

std::vector<double> predictions(std::span<const UnlabeledSample> unlabeled) {
  std::vector<double> f;
  f.reserve(unlabeled.size());
  for (const auto& s : unlabeled) f.push_back(s.f);
  return f;
}

}  // namespace

EstimateReport empirical_mean_ci(std::span<const LabeledSample> labeled,
                                 double alpha) {
  if (labeled.size() < 2)
    throw DataError("empirical_mean_ci: need at least 2 labeled samples");
  const auto y = outcomes(labeled);
  const double est = mean(y);
  const double var = sample_variance(y) / static_cast<double>(y.size());
  return make_wald_report(est, var, alpha, "empirical", labeled.size(), 0);
}

EstimateReport ppi_mean_ci(std::span<const LabeledSample> labeled,
                           std::span<const UnlabeledSample> unlabeled,
                           double alpha) {
  if (labeled.size() < 2)
    throw DataError("ppi_mean_ci: need at least 2 labeled samples");
  if (unlabeled.empty())
    throw DataError("ppi_mean_ci: need at least 1 unlabeled sample");
  const auto r = residuals(labeled);
  const auto f = predictions(unlabeled);
  const double n = static_cast<double>(labeled.size());
  const double N = static_cast<double>(unlabeled.size());
  const double est = mean(f) + mean(r);
  double var = sample_variance(r) / n;
  if (unlabeled.size() >= 2) var += sample_variance(f) / N;
  return make_wald_report(est, var, alpha, "ppi", labeled.size(), unlabeled.size());
}

LambdaEstimate ppi_lambda(std::span<const LabeledSample> labeled,
                          std::span<const UnlabeledSample> unlabeled) {
  if (labeled.size() < 2)
    throw DataError("ppi_lambda: need at least 2 labeled samples");
  if (unlabeled.empty())
    throw DataError("ppi_lambda: need at least 1 unlabeled sample");
  std::vector<double> y, fl;
  for (const auto& s : labeled) {
    y.push_back(s.y);
    fl.push_back(s.f);
  }
  std::vector<double> pooled = fl;
  for (const auto& s : unlabeled) pooled.push_back(s.f);

  LambdaEstimate est;
  est.cov_yf = sample_covariance(y, fl);
  est.pooled_var_f = sample_variance(pooled);
  est.ratio = static_cast<double>(labeled.size()) /
              static_cast<double>(unlabeled.size());
  if (est.pooled_var_f <= 0.0)
    throw NumericError("ppi_lambda: constant predictor (pooled Var(f) = 0)");
  est.lambda = est.cov_yf / ((1.0 + est.ratio) * est.pooled_var_f);
  return est;
}

EstimateReport ppi_pp_mean_ci_fixed_lambda(
    std::span<const LabeledSample> labeled,
    std::span<const UnlabeledSample> unlabeled, double lambda, double alpha) {
  if (labeled.size() < 2)
    throw DataError("ppi_pp_mean_ci: need at least 2 labeled samples");
  if (unlabeled.empty())
    throw DataError("ppi_pp_mean_ci: need at least 1 unlabeled sample");
  const double n = static_cast<double>(labeled.size());
  const double N = static_cast<double>(unlabeled.size());
  std::vector<double> scaled_resid;  // y - lambda * f
  scaled_resid.reserve(labeled.size());
  for (const auto& s : labeled) scaled_resid.push_back(s.y - lambda * s.f);
  const auto f = predictions(unlabeled);
  const double est = lambda * mean(f) + mean(scaled_resid);
  double var = sample_variance(scaled_resid) / n;
  if (unlabeled.size() >= 2) var += lambda * lambda * sample_variance(f) / N;
  return make_wald_report(est, var, alpha, "ppi++", labeled.size(),
                          unlabeled.size());
}

EstimateReport ppi_pp_mean_ci(std::span<const LabeledSample> labeled,
                              std::span<const UnlabeledSample> unlabeled,
                              double alpha) {
  const auto lam = ppi_lambda(labeled, unlabeled);
  return ppi_pp_mean_ci_fixed_lambda(labeled, unlabeled, lam.lambda, alpha);
}

EstimateReport coordinate_partition_mean_ci(
    std::span<const LabeledSample> labeled,
    std::span<const UnlabeledSample> unlabeled, int coord, double alpha) {
  if (labeled.size() < 2)
    throw DataError("coordinate_partition_mean_ci: need >= 2 labeled samples");
  if (unlabeled.empty())
    throw DataError("coordinate_partition_mean_ci: need >= 1 unlabeled sample");
  if (coord < 0 || coord >= static_cast<int>(labeled[0].x.size()))
    throw ArgumentError("coordinate_partition_mean_ci: coordinate out of range");

  // group residuals by the coordinate's value; it must be binary overall
  std::map<double, std::vector<double>> group_resid;
  for (const auto& s : labeled) group_resid[s.x[coord]].push_back(s.residual());
  std::map<double, std::size_t> group_count_u;
  for (const auto& s : unlabeled) group_count_u[s.x[coord]]++;
  std::map<double, bool> values;
  for (const auto& [v, _] : group_resid) values[v] = true;
  for (const auto& [v, _] : group_count_u) values[v] = true;
  if (values.size() != 2)
    throw ArgumentError(
        "coordinate_partition_mean_ci: coordinate is not binary (" +
        std::to_string(values.size()) + " distinct values)");

  const double N = static_cast<double>(unlabeled.size());
  double correction = 0.0;
  double var = 0.0;
  for (const auto& [v, _] : values) {
    auto it = group_resid.find(v);
    if (it == group_resid.end() || it->second.size() < 2)
      throw DataError("coordinate_partition_mean_ci: group with < 2 labeled points");
    const auto& r = it->second;
    const double p_hat = static_cast<double>(group_count_u[v]) / N;
    correction += p_hat * mean(r);
    var += p_hat * p_hat * sample_variance(r) / static_cast<double>(r.size());
  }
  const auto f = predictions(unlabeled);
  if (unlabeled.size() >= 2) var += sample_variance(f) / N;
  return make_wald_report(mean(f) + correction, var, alpha, "coord_partition",
                          labeled.size(), unlabeled.size());
}

}  // namespace pai
