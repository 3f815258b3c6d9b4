#include "pai/paq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "pai/errors.hpp"
#include "pai/stats.hpp"

namespace pai {

namespace {

void require_sorted_unit(std::span<const double> positions) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!(positions[i] >= 0.0 && positions[i] <= 1.0))
      throw ArgumentError("positions must lie in [0,1]; apply the PIT first");
    if (i > 0 && positions[i] < positions[i - 1])
      throw ArgumentError("positions must be sorted");
  }
}

// Integral over [a,b] of the unique degree-(k-1) interpolant through the k
// nodes, via divided differences expanded to monomial coefficients.
double integrate_interpolant(std::span<const double> nodes,
                             std::span<const double> values, double a,
                             double b) {
  const std::size_t k = nodes.size();
  std::vector<double> dd(values.begin(), values.end());
  for (std::size_t level = 1; level < k; ++level) {
    for (std::size_t i = k - 1; i >= level; --i) {
      const double denom = nodes[i] - nodes[i - level];
      if (denom == 0.0)
        throw NumericError("degenerate interpolation nodes (duplicate position)");
      dd[i] = (dd[i] - dd[i - 1]) / denom;
    }
  }
  // Horner on the Newton form, carried as monomial coefficients
  std::vector<double> poly{dd[k - 1]};
  for (std::size_t j = k - 1; j-- > 0;) {
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i + 1] += poly[i];
      next[i] -= nodes[j] * poly[i];
    }
    next[0] += dd[j];
    poly = std::move(next);
  }
  double integral = 0.0;
  double pa = a, pb = b;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    integral += poly[i] * (pb - pa) / static_cast<double>(i + 1);
    pa *= a;
    pb *= b;
  }
  return integral;
}

struct Block {
  std::size_t first_node = 0;  // inclusive node index range
  std::size_t last_node = 0;
  double a = 0.0;
  double b = 0.0;
};

// Consecutive blocks of p+1 order statistics sharing endpoints; boundary
// blocks extend to 0 and 1; a non-divisible interior remainder is absorbed
// into the last interior block's span, fitted on its last p+1 nodes.
std::vector<Block> make_blocks(std::span<const double> pos, int p) {
  const std::size_t n = pos.size();
  if (n < 2 * static_cast<std::size_t>(p) + 2)
    throw DataError("degree-p quadrature needs n >= 2p+2");
  const std::size_t up = static_cast<std::size_t>(p);

  std::vector<Block> blocks;
  blocks.push_back({0, up, 0.0, pos[up]});

  const std::size_t interior_right = n - up - 1;  // index of X_{n-p}
  const std::size_t gaps = interior_right - up;   // n - 2p - 1
  const std::size_t k_full = gaps / up;
  const std::size_t rem = gaps % up;
  if (k_full == 0) {
    blocks.push_back({interior_right - up, interior_right, pos[up],
                      pos[interior_right]});
  } else {
    for (std::size_t j = 0; j < k_full; ++j) {
      const std::size_t left = up + j * up;
      std::size_t right = left + up;
      std::size_t first = left;
      if (j + 1 == k_full && rem > 0) {
        right = interior_right;
        first = right - up;
      }
      blocks.push_back({first, right, pos[left], pos[right]});
    }
  }
  blocks.push_back({interior_right, n - 1, pos[interior_right], 1.0});
  return blocks;
}

}  // namespace

std::vector<std::size_t> nearest_labeled_indices(
    std::span<const double> labeled_x, std::span<const double> queries) {
  if (labeled_x.empty()) throw DataError("nearest_labeled_indices: no labeled points");
  struct Entry {
    double x;
    std::size_t idx;
  };
  std::vector<Entry> sorted;
  sorted.reserve(labeled_x.size());
  for (std::size_t i = 0; i < labeled_x.size(); ++i) sorted.push_back({labeled_x[i], i});
  std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
    return a.x < b.x || (a.x == b.x && a.idx < b.idx);
  });

  // first entry of a run of equal positions (carries the smallest index)
  auto run_start = [&](std::size_t i) {
    while (i > 0 && sorted[i - 1].x == sorted[i].x) --i;
    return i;
  };

  std::vector<std::size_t> out;
  out.reserve(queries.size());
  for (double q : queries) {
    auto it = std::lower_bound(
        sorted.begin(), sorted.end(), q,
        [](const Entry& e, double v) { return e.x < v; });
    if (it == sorted.end()) {
      out.push_back(sorted[run_start(sorted.size() - 1)].idx);
      continue;
    }
    if (it == sorted.begin()) {
      out.push_back(it->idx);
      continue;
    }
    const std::size_t right = static_cast<std::size_t>(it - sorted.begin());
    const std::size_t left = run_start(right - 1);
    const double dl = q - sorted[left].x;
    const double dr = sorted[right].x - q;
    if (dl < dr) {
      out.push_back(sorted[left].idx);
    } else if (dr < dl) {
      out.push_back(sorted[right].idx);
    } else {
      out.push_back(std::min(sorted[left].idx, sorted[right].idx));
    }
  }
  return out;
}

double paq_nn_estimate(std::span<const LabeledSample> labeled,
                       std::span<const UnlabeledSample> unlabeled) {
  if (labeled.empty() || unlabeled.empty())
    throw DataError("paq_nn_estimate: need labeled and unlabeled samples");
  if (labeled[0].x.size() != 1 || unlabeled[0].x.size() != 1)
    throw ArgumentError("paq_nn_estimate: univariate features required");
  std::vector<double> lx, qx;
  lx.reserve(labeled.size());
  for (const auto& s : labeled) lx.push_back(s.x[0]);
  qx.reserve(unlabeled.size());
  for (const auto& s : unlabeled) qx.push_back(s.x[0]);
  const auto nn = nearest_labeled_indices(lx, qx);
  double sum = 0.0;
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    sum += unlabeled[i].f + labeled[nn[i]].residual();
  }
  return sum / static_cast<double>(unlabeled.size());
}

double paq_trapezoid_form(std::span<const double> positions,
                          std::span<const double> residual_values) {
  if (positions.empty() || positions.size() != residual_values.size())
    throw ArgumentError("paq_trapezoid_form: need matched nonempty inputs");
  require_sorted_unit(positions);
  const std::size_t n = positions.size();
  double term = positions[0] * residual_values[0] +
                (1.0 - positions[n - 1]) * residual_values[n - 1];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    term += (positions[i + 1] - positions[i]) * 0.5 *
            (residual_values[i] + residual_values[i + 1]);
  }
  return term;
}

double paq_degree_p_residual_term(std::span<const double> positions,
                                  std::span<const double> residual_values,
                                  int degree) {
  if (degree < 1) throw ArgumentError("degree must be >= 1");
  if (positions.size() != residual_values.size())
    throw ArgumentError("positions/values size mismatch");
  require_sorted_unit(positions);
  double total = 0.0;
  for (const Block& blk : make_blocks(positions, degree)) {
    const std::size_t count = blk.last_node - blk.first_node + 1;
    total += integrate_interpolant(positions.subspan(blk.first_node, count),
                                   residual_values.subspan(blk.first_node, count),
                                   blk.a, blk.b);
  }
  return total;
}

SpacingProfile pit_positions(std::span<const double> labeled_x,
                             std::span<const double> unlabeled_x) {
  if (labeled_x.empty() || unlabeled_x.empty())
    throw DataError("pit_positions: need labeled and unlabeled values");
  StepCdf cdf(std::vector<double>(unlabeled_x.begin(), unlabeled_x.end()));
  SpacingProfile out;
  out.positions.reserve(labeled_x.size());
  for (double x : labeled_x) out.positions.push_back(cdf(x));
  std::sort(out.positions.begin(), out.positions.end());

  auto& u = out.positions;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (u[i] <= u[i - 1]) {
      u[i] = std::nextafter(u[i - 1], std::numeric_limits<double>::infinity());
      ++out.perturbed;
    }
  }
  // a perturbation chain can spill past 1; pull it back down
  if (u.back() > 1.0) {
    u.back() = 1.0;
    for (std::size_t i = u.size() - 1; i-- > 0;) {
      if (u[i] >= u[i + 1]) u[i] = std::nextafter(u[i + 1], -1.0);
    }
  }

  out.gaps.reserve(u.size() + 1);
  out.gaps.push_back(u.front());
  for (std::size_t i = 1; i < u.size(); ++i) out.gaps.push_back(u[i] - u[i - 1]);
  out.gaps.push_back(1.0 - u.back());
  return out;
}

double paq_degree_p_estimate(std::span<const LabeledSample> labeled,
                             std::span<const UnlabeledSample> unlabeled,
                             const QuadratureConfig& cfg) {
  if (labeled.empty() || unlabeled.empty())
    throw DataError("paq_degree_p_estimate: need labeled and unlabeled samples");
  if (labeled[0].x.size() != 1)
    throw ArgumentError("paq_degree_p_estimate: univariate features required");

  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labeled[a].x[0] < labeled[b].x[0];
  });

  std::vector<double> pos, resid;
  pos.reserve(order.size());
  resid.reserve(order.size());
  if (cfg.use_pit) {
    std::vector<double> lx, ux;
    for (auto i : order) lx.push_back(labeled[i].x[0]);
    for (const auto& s : unlabeled) ux.push_back(s.x[0]);
    pos = pit_positions(lx, ux).positions;  // ECDF is monotone: order kept
  } else {
    for (auto i : order) pos.push_back(labeled[i].x[0]);
  }
  for (auto i : order) resid.push_back(labeled[i].residual());

  double mean_f = 0.0;
  for (const auto& s : unlabeled) mean_f += s.f;
  mean_f /= static_cast<double>(unlabeled.size());
  return mean_f + paq_degree_p_residual_term(pos, resid, cfg.degree);
}

EstimateReport paq_ci(std::span<const LabeledSample> labeled,
                      std::span<const UnlabeledSample> unlabeled,
                      const QuadratureConfig& cfg, double alpha) {
  if (labeled.empty() || unlabeled.empty())
    throw DataError("paq_ci: need labeled and unlabeled samples");
  if (labeled[0].x.size() != 1)
    throw ArgumentError("paq_ci: univariate features required");
  const bool trapezoid_path =
      cfg.degree == 1 && cfg.boundary != BoundaryPolicy::kPolynomialExtrapolation;
  if (!cfg.deriv_bound)
    throw ArgumentError("paq_ci: derivative bound required for an interval");
  if (trapezoid_path && !cfg.deriv_bound_first)
    throw ArgumentError("paq_ci: degree-1 interval needs both L1 and L2 bounds");

  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labeled[a].x[0] < labeled[b].x[0];
  });
  std::vector<double> lx, ux, resid;
  for (auto i : order) {
    lx.push_back(labeled[i].x[0]);
    resid.push_back(labeled[i].residual());
  }
  for (const auto& s : unlabeled) ux.push_back(s.x[0]);

  SpacingProfile profile;
  if (cfg.use_pit) {
    profile = pit_positions(lx, ux);
  } else {
    profile.positions = lx;
    require_sorted_unit(profile.positions);
    profile.gaps.push_back(lx.front());
    for (std::size_t i = 1; i < lx.size(); ++i)
      profile.gaps.push_back(lx[i] - lx[i - 1]);
    profile.gaps.push_back(1.0 - lx.back());
  }

  double residual_term;
  double remainder = 0.0;
  if (trapezoid_path) {
    residual_term = paq_trapezoid_form(profile.positions, resid);
    const double l1 = *cfg.deriv_bound_first;
    const double l2 = *cfg.deriv_bound;
    const auto& g = profile.gaps;
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
      remainder += l2 / 12.0 * g[i] * g[i] * g[i];
    remainder += l1 / 2.0 * (g.front() * g.front() + g.back() * g.back());
  } else {
    residual_term =
        paq_degree_p_residual_term(profile.positions, resid, cfg.degree);
    double factorial = 1.0;
    for (int i = 2; i <= cfg.degree + 1; ++i) factorial *= i;
    for (const Block& blk : make_blocks(profile.positions, cfg.degree)) {
      remainder += *cfg.deriv_bound / factorial *
                   std::pow(blk.b - blk.a, cfg.degree + 2);
    }
  }

  double mean_f = 0.0;
  for (const auto& s : unlabeled) mean_f += s.f;
  const double N = static_cast<double>(unlabeled.size());
  mean_f /= N;

  // variance of the unlabeled average of f + imputed residual
  const auto nn = nearest_labeled_indices(lx, ux);
  std::vector<double> imputed;
  imputed.reserve(unlabeled.size());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    imputed.push_back(unlabeled[i].f + resid[nn[i]]);
  }
  double var = unlabeled.size() >= 2 ? sample_variance(imputed) / N : 0.0;

  EstimateReport r;
  r.estimate = mean_f + residual_term;
  r.variance_estimate = var;
  r.alpha = alpha;
  r.method = "paq";
  // conservative: Wald term for the N-average plus the deterministic
  // quadrature remainder bound
  r.half_width = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(var) + remainder;
  r.n_used = labeled.size();
  r.N_used = unlabeled.size();
  return r;
}

RateProbeResult rate_probe(const std::function<double(double)>& residual,
                           double residual_integral, int degree,
                           std::span<const int> n_grid, int replications,
                           std::uint64_t seed) {
  if (replications < 2) throw ArgumentError("rate_probe: need >= 2 replications");
  RateProbeResult out;
  for (int n : n_grid) {
    std::vector<double> estimates(replications);
    for (int rep = 0; rep < replications; ++rep) {
      RandomSource rng(seed, (static_cast<std::uint64_t>(n) << 32) |
                                 static_cast<std::uint64_t>(rep));
      std::vector<double> pos(n);
      for (auto& p : pos) p = rng.uniform();
      std::sort(pos.begin(), pos.end());
      std::vector<double> vals(pos.size());
      for (std::size_t i = 0; i < pos.size(); ++i) vals[i] = residual(pos[i]);
      estimates[rep] = degree == 1
                           ? paq_trapezoid_form(pos, vals)
                           : paq_degree_p_residual_term(pos, vals, degree);
    }
    RateRow row;
    row.n = n;
    row.mean_bias = mean(estimates) - residual_integral;
    row.variance = sample_variance(estimates);
    out.rows.push_back(row);
  }

  // least-squares slope of y against log n
  auto slope = [&](auto value_of) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : out.rows) {
      const double y = value_of(row);
      if (!std::isfinite(y)) continue;
      const double x = std::log(static_cast<double>(row.n));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++m;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  out.bias_slope =
      slope([](const RateRow& r) { return std::log(std::abs(r.mean_bias)); });
  out.variance_slope =
      slope([](const RateRow& r) { return std::log(r.variance); });
  return out;
}

void write_rate_probe_csv(const RateProbeResult& result,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.precision(12);
  out << "n,mean_bias,var\n";
  for (const auto& row : result.rows) {
    out << row.n << "," << row.mean_bias << "," << row.variance << "\n";
  }
  out << "slope," << result.bias_slope << "," << result.variance_slope << "\n";
}

}  // namespace pai
