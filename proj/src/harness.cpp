#include "pai/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

#include "pai/baselines.hpp"
#include "pai/errors.hpp"
#include "pai/part_regression.hpp"
#include "pai/stats.hpp"

namespace pai {

namespace {

constexpr double kIncomeThetaSex = 2.0;
constexpr double kIncomeThetaAge = 0.5;

}  // namespace

Dataset synth_generate(const SyntheticSpec& spec, std::size_t M,
                       std::uint64_t seed, std::uint64_t stream) {
  if (M < 4) throw ArgumentError("synth_generate: pool size must be >= 4");
  RandomSource rng(seed, stream);
  Dataset ds;
  ds.labeled.reserve(M);
  switch (spec.tag) {
    case GeneratorTag::kSineResidual: {
      ds.dim = 1;
      for (std::size_t i = 0; i < M; ++i) {
        const double x = rng.uniform(0.0, std::numbers::pi);
        double y = x * x + std::sin(x);
        if (spec.sigma > 0.0) y += spec.sigma * rng.normal();
        ds.labeled.push_back({{x}, y, x * x});
      }
      break;
    }
    case GeneratorTag::kHeteroscedasticBinary: {
      ds.dim = 1;
      for (std::size_t i = 0; i < M; ++i) {
        const double x = rng.uniform() < 0.5 ? -1.0 : 1.0;
        ds.labeled.push_back({{x}, x + rng.normal(), 0.0});
      }
      break;
    }
    case GeneratorTag::kLinearIncome: {
      ds.dim = 2;
      for (std::size_t i = 0; i < M; ++i) {
        const double sex = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const double age = static_cast<double>(rng.below(100));
        const double noise_sd = sex > 0.5 ? 3.0 : 1.0;
        const double y = kIncomeThetaSex * sex + kIncomeThetaAge * age +
                         noise_sd * rng.normal();
        const double f =
            0.9 * kIncomeThetaSex * sex + 1.05 * kIncomeThetaAge * age;
        ds.labeled.push_back({{sex, age}, y, f});
      }
      break;
    }
  }
  return ds;
}

double synth_truth_mean(const SyntheticSpec& spec) {
  switch (spec.tag) {
    case GeneratorTag::kSineResidual:
      return std::numbers::pi * std::numbers::pi / 3.0 + 2.0 / std::numbers::pi;
    case GeneratorTag::kHeteroscedasticBinary:
      return 0.0;
    case GeneratorTag::kLinearIncome:
      return 0.5 * kIncomeThetaSex + 49.5 * kIncomeThetaAge;
  }
  throw ArgumentError("unknown generator tag");
}

std::vector<double> linear_income_theta() {
  return {kIncomeThetaSex, kIncomeThetaAge};
}

MethodSpec make_method(MethodSpec::Kind kind, std::string name) {
  MethodSpec m;
  m.kind = kind;
  if (!name.empty()) {
    m.name = std::move(name);
  } else {
    switch (kind) {
      case MethodSpec::Kind::kEmpirical: m.name = "empirical"; break;
      case MethodSpec::Kind::kPpi: m.name = "ppi"; break;
      case MethodSpec::Kind::kPpiPp: m.name = "ppi++"; break;
      case MethodSpec::Kind::kPart: m.name = "part"; break;
      case MethodSpec::Kind::kCoordPartition: m.name = "coord_partition"; break;
      case MethodSpec::Kind::kPaq: m.name = "paq"; break;
      case MethodSpec::Kind::kPartOls: m.name = "part_ols"; break;
    }
  }
  return m;
}

namespace {

std::optional<EstimateReport> run_method(const MethodSpec& m, const Dataset& ds,
                                         double alpha) {
  try {
    switch (m.kind) {
      case MethodSpec::Kind::kEmpirical:
        return empirical_mean_ci(ds.labeled, alpha);
      case MethodSpec::Kind::kPpi:
        return ppi_mean_ci(ds.labeled, ds.unlabeled, alpha);
      case MethodSpec::Kind::kPpiPp:
        return ppi_pp_mean_ci(ds.labeled, ds.unlabeled, alpha);
      case MethodSpec::Kind::kPart:
        return part_mean_ci(ds, m.tree, alpha).report;
      case MethodSpec::Kind::kCoordPartition:
        return coordinate_partition_mean_ci(ds.labeled, ds.unlabeled, m.coord,
                                            alpha);
      case MethodSpec::Kind::kPaq:
        return paq_ci(ds.labeled, ds.unlabeled, m.quad, alpha);
      case MethodSpec::Kind::kPartOls:
        return part_ols_ci(ds, m.coord, m.tree, alpha).report;
    }
  } catch (const ArgumentError&) {
  } catch (const DataError&) {
  } catch (const NumericError&) {
  }
  return std::nullopt;
}

struct Cell {
  bool valid = false;
  double width = 0.0;
  double estimate = 0.0;
  bool hit = false;
};

}  // namespace

SimResult run_sweep(const SimConfig& cfg) {
  if (cfg.replications < 1)
    throw ArgumentError("run_sweep: replications must be >= 1");
  if (cfg.methods.empty()) throw ArgumentError("run_sweep: no methods");
  if (!cfg.synthetic && !cfg.pool)
    throw ArgumentError("run_sweep: no data source");
  if (cfg.pool) {
    if (!cfg.pool->unlabeled.empty())
      throw ArgumentError("run_sweep: the pool must be fully labeled");
  } else if (cfg.pool_size < 4) {
    throw ArgumentError("run_sweep: synthetic pool_size must be >= 4");
  }

  const std::size_t M = cfg.pool ? cfg.pool->labeled.size() : cfg.pool_size;
  for (auto n : cfg.n_grid) {
    if (n < 2 || n + 1 > M)
      throw ArgumentError("run_sweep: every n must satisfy 2 <= n <= M-1");
  }

  double base_truth;
  if (cfg.truth) {
    base_truth = *cfg.truth;
  } else if (cfg.synthetic) {
    base_truth = synth_truth_mean(*cfg.synthetic);
  } else {
    std::vector<double> ys;
    ys.reserve(M);
    for (const auto& s : cfg.pool->labeled) ys.push_back(s.y);
    base_truth = mean(ys);
  }

  const std::size_t reps = static_cast<std::size_t>(cfg.replications);
  const std::size_t n_methods = cfg.methods.size();
  // cells[n_idx][rep * n_methods + method_idx]: indexed slots keep the
  // aggregation independent of worker scheduling
  std::vector<std::vector<Cell>> cells(
      cfg.n_grid.size(), std::vector<Cell>(reps * n_methods));

  auto run_rep = [&](std::size_t n_idx, std::size_t rep) {
    const std::size_t n = cfg.n_grid[n_idx];
    const std::uint64_t stream =
        (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint64_t>(rep);
    RandomSource rng(cfg.seed, stream);
    Dataset ds;
    if (cfg.synthetic) {
      Dataset full = synth_generate(*cfg.synthetic, M, cfg.seed, stream);
      ds = obfuscate_split(full, n, rng);
    } else {
      ds = obfuscate_split(*cfg.pool, n, rng);
    }
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const MethodSpec& m = cfg.methods[mi];
      auto report = run_method(m, ds, cfg.alpha);
      Cell& cell = cells[n_idx][rep * n_methods + mi];
      if (!report) continue;
      const double truth =
          m.truth_override ? *m.truth_override : base_truth;
      cell.valid = true;
      cell.width = report->half_width;
      cell.estimate = report->estimate;
      cell.hit = report->contains(truth);
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  for (std::size_t n_idx = 0; n_idx < cfg.n_grid.size(); ++n_idx) {
    if (jobs == 1) {
      for (std::size_t rep = 0; rep < reps; ++rep) run_rep(n_idx, rep);
    } else {
      std::vector<std::thread> workers;
      for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          for (std::size_t rep = static_cast<std::size_t>(w); rep < reps;
               rep += static_cast<std::size_t>(jobs)) {
            run_rep(n_idx, rep);
          }
        });
      }
      for (auto& t : workers) t.join();
    }
  }

  SimResult out;
  for (std::size_t n_idx = 0; n_idx < cfg.n_grid.size(); ++n_idx) {
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      SimRow row;
      row.n = cfg.n_grid[n_idx];
      row.method = cfg.methods[mi].name;
      std::vector<double> widths, estimates;
      int hits = 0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const Cell& cell = cells[n_idx][rep * n_methods + mi];
        if (!cell.valid) continue;
        widths.push_back(cell.width);
        estimates.push_back(cell.estimate);
        hits += cell.hit ? 1 : 0;
      }
      row.valid = static_cast<int>(widths.size());
      if (row.valid > 0) {
        row.mean_width = mean(widths);
        row.mean_estimate = mean(estimates);
        row.coverage = static_cast<double>(hits) / row.valid;
        row.sd_width =
            row.valid >= 2 ? std::sqrt(sample_variance(widths)) : 0.0;
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<BoundRow> coverage_vs_bound(const SimConfig& cfg,
                                        std::vector<int> leaf_caps) {
  int dim = 0;
  if (cfg.pool) {
    dim = cfg.pool->dim;
  } else if (cfg.synthetic) {
    dim = cfg.synthetic->tag == GeneratorTag::kLinearIncome ? 2 : 1;
  }
  if (dim < 1) throw ArgumentError("coverage_vs_bound: no data source");

  std::vector<BoundRow> out;
  for (int cap : leaf_caps) {
    if (cap < 1) throw ArgumentError("coverage_vs_bound: leaf cap must be >= 1");
    int depth = 0;
    while ((1 << depth) < cap) ++depth;
    SimConfig sub = cfg;
    sub.methods.clear();
    MethodSpec part = make_method(MethodSpec::Kind::kPart);
    part.tree.max_depth = depth;
    sub.methods.push_back(part);
    const SimResult res = run_sweep(sub);
    for (const SimRow& row : res.rows) {
      BoundRow b;
      b.n = row.n;
      b.leaf_cap = cap;
      b.coverage = row.coverage;
      b.bound = 1.0 - cfg.alpha - coverage_correction(cap, row.n, dim);
      out.push_back(b);
    }
  }
  return out;
}

void write_sim_csv(const SimResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.precision(12);
  out << "n,method,mean_width,sd_width,coverage,mean_estimate\n";
  for (const SimRow& row : result.rows) {
    out << row.n << "," << row.method << ",";
    if (row.valid == 0) {
      out << "NA,NA,NA,NA\n";
    } else {
      out << row.mean_width << "," << row.sd_width << "," << row.coverage
          << "," << row.mean_estimate << "\n";
    }
  }
}

void write_plot_data(const SimResult& result, const std::string& prefix) {
  {
    std::ofstream out(prefix + "_width_vs_n.csv");
    if (!out) throw DataError("cannot open plot-data file for writing");
    out.precision(12);
    out << "n,method,mean_width,sd_width\n";
    for (const SimRow& row : result.rows) {
      out << row.n << "," << row.method << ",";
      if (row.valid == 0) {
        out << "NA,NA\n";
      } else {
        out << row.mean_width << "," << row.sd_width << "\n";
      }
    }
  }
  {
    std::ofstream out(prefix + "_coverage_vs_n.csv");
    if (!out) throw DataError("cannot open plot-data file for writing");
    out.precision(12);
    out << "n,method,coverage\n";
    for (const SimRow& row : result.rows) {
      out << row.n << "," << row.method << ",";
      if (row.valid == 0) {
        out << "NA\n";
      } else {
        out << row.coverage << "\n";
      }
    }
  }
}

}  // namespace pai
