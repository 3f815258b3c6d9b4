#include "pai/stats.hpp"

#include <algorithm>
#include <cmath>

#include "pai/errors.hpp"
#include "pai/random.hpp"

namespace pai {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation to the inverse normal CDF (~1e-9 absolute
// accuracy on its own), refined below by one Newton step on Phi.
double acklam(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;

  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ArgumentError("normal_quantile: p must lie in (0, 1)");
  }
  double z = acklam(p);
  // one Newton step on Phi(z) = p; the pdf never vanishes here
  double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  if (pdf > 0.0) z -= (normal_cdf(z) - p) / pdf;
  return z;
}

double RandomSource::normal() { return normal_quantile(uniform_open()); }

double mean(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean: empty input");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw DataError("sample_variance: need at least two values");
  }
  double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return s / static_cast<double>(values.size() - 1);
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("sample_covariance: size mismatch");
  if (a.size() < 2) throw DataError("sample_covariance: need at least two pairs");
  double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

std::vector<double> empirical_quantiles(std::span<const double> values, int n) {
  if (values.empty()) throw ArgumentError("empirical_quantiles: empty input");
  if (n < 2) throw ArgumentError("empirical_quantiles: n must be >= 2");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto size = static_cast<long long>(sorted.size());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n - 1));
  for (long long j = 1; j < n; ++j) {
    long long rank = (j * size + n - 1) / n;  // ceil(j*size/n), 1-based
    if (rank < 1) rank = 1;
    out.push_back(sorted[static_cast<std::size_t>(rank - 1)]);
  }
  return out;
}

StepCdf::StepCdf(std::vector<double> values) : knots_(std::move(values)) {
  if (knots_.empty()) throw ArgumentError("StepCdf: empty knot set");
  std::sort(knots_.begin(), knots_.end());
}

double StepCdf::operator()(double x) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  return static_cast<double>(it - knots_.begin()) /
         static_cast<double>(knots_.size());
}

}  // namespace pai
