#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pai/baselines.hpp"
#include "pai/errors.hpp"
#include "pai/harness.hpp"
#include "pai/paq.hpp"
#include "pai/part_mean.hpp"
#include "pai/part_regression.hpp"

namespace {

using nlohmann::json;

// all numeric output carries 12 significant digits
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double round12(double v) { return std::stod(fmt(v)); }

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& item : out) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    item = a == std::string::npos ? "" : item.substr(a, b - a + 1);
  }
  std::erase(out, "");
  return out;
}

// "features=x1,x2;label=y;prediction=f" (label optional)
pai::CsvSchema parse_schema(const std::string& text) {
  pai::CsvSchema schema;
  for (const std::string& part : split_list(text, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw pai::ArgumentError("schema entry '" + part + "' is not key=value");
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    if (key == "features") {
      schema.feature_columns = split_list(value, ',');
    } else if (key == "label") {
      schema.label_column = value;
    } else if (key == "prediction") {
      schema.prediction_column = value;
    } else {
      throw pai::ArgumentError("unknown schema key '" + key + "'");
    }
  }
  if (schema.feature_columns.empty())
    throw pai::ArgumentError("schema needs at least one feature column");
  if (schema.prediction_column.empty())
    throw pai::ArgumentError("schema needs a prediction column");
  return schema;
}

void emit_report(const pai::EstimateReport& r, const std::string& format,
                 const std::string& tree_dump) {
  if (format == "json") {
    json j;
    j["estimate"] = round12(r.estimate);
    j["half_width"] = round12(r.half_width);
    j["lower"] = round12(r.lower());
    j["upper"] = round12(r.upper());
    j["alpha"] = round12(r.alpha);
    j["method"] = r.method;
    j["variance_estimate"] = round12(r.variance_estimate);
    j["n_used"] = r.n_used;
    j["N_used"] = r.N_used;
    if (r.leaf_count > 0) j["leaf_count"] = r.leaf_count;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "estimate,half_width,lower,upper,alpha,method,"
                 "variance_estimate,n_used,N_used,leaf_count\n"
              << fmt(r.estimate) << "," << fmt(r.half_width) << ","
              << fmt(r.lower()) << "," << fmt(r.upper()) << "," << fmt(r.alpha)
              << "," << r.method << "," << fmt(r.variance_estimate) << ","
              << r.n_used << "," << r.N_used << "," << r.leaf_count << "\n";
  }
  if (!tree_dump.empty()) std::cout << tree_dump;
}

std::optional<double> opt_value(const std::vector<double>& bounds,
                                std::size_t i) {
  return i < bounds.size() ? std::optional<double>(bounds[i]) : std::nullopt;
}

struct EstimateMeanArgs {
  std::string data;
  std::string schema;
  std::string method = "ppi";
  double alpha = 0.05;
  int depth = 0;
  int min_leaf = 2;
  int coord = 1;  // 1-based
  int paq_degree = 1;
  std::vector<double> deriv_bounds;  // L1,L2 at degree 1; L otherwise
  bool dump_tree = false;
  bool global_candidates = false;
  std::string format = "json";
};

int cmd_estimate_mean(const EstimateMeanArgs& a) {
  const pai::Dataset ds = pai::load_dataset(a.data, parse_schema(a.schema));
  pai::EstimateReport report;
  std::string tree_dump;
  if (a.method == "empirical") {
    report = pai::empirical_mean_ci(ds.labeled, a.alpha);
  } else if (a.method == "ppi") {
    report = pai::ppi_mean_ci(ds.labeled, ds.unlabeled, a.alpha);
  } else if (a.method == "ppi++") {
    report = pai::ppi_pp_mean_ci(ds.labeled, ds.unlabeled, a.alpha);
  } else if (a.method == "coord-partition") {
    report = pai::coordinate_partition_mean_ci(ds.labeled, ds.unlabeled,
                                               a.coord - 1, a.alpha);
  } else if (a.method == "part") {
    pai::TreeOptions opts;
    opts.max_depth = a.depth;
    opts.min_leaf = a.min_leaf;
    opts.global_candidates = a.global_candidates;
    auto result = pai::part_mean_ci(ds, opts, a.alpha);
    report = result.report;
    if (a.dump_tree) tree_dump = result.tree.dump();
  } else if (a.method == "paq") {
    if (a.deriv_bounds.empty())
      throw pai::ArgumentError(
          "--method paq needs --deriv-bounds (L1,L2 at degree 1; L above)");
    pai::QuadratureConfig cfg;
    cfg.degree = a.paq_degree;
    if (a.paq_degree == 1) {
      if (a.deriv_bounds.size() < 2)
        throw pai::ArgumentError("degree-1 paq needs two bounds: L1,L2");
      cfg.deriv_bound_first = opt_value(a.deriv_bounds, 0);
      cfg.deriv_bound = opt_value(a.deriv_bounds, 1);
    } else {
      cfg.deriv_bound = opt_value(a.deriv_bounds, 0);
    }
    report = pai::paq_ci(ds.labeled, ds.unlabeled, cfg, a.alpha);
  } else {
    throw pai::ArgumentError("unknown method '" + a.method + "'");
  }
  emit_report(report, a.format, tree_dump);
  return 0;
}

struct EstimateOlsArgs {
  std::string data;
  std::string schema;
  int coord = 1;  // 1-based target coordinate
  double alpha = 0.05;
  int depth = 0;
  int min_leaf = 2;
  bool dump_tree = false;
  bool global_candidates = false;
  std::string format = "json";
};

int cmd_estimate_ols(const EstimateOlsArgs& a) {
  const pai::Dataset ds = pai::load_dataset(a.data, parse_schema(a.schema));
  pai::TreeOptions opts;
  opts.max_depth = a.depth;
  opts.min_leaf = a.min_leaf;
  opts.global_candidates = a.global_candidates;
  auto result = pai::part_ols_ci(ds, a.coord - 1, opts, a.alpha);
  emit_report(result.report, a.format,
              a.dump_tree ? result.tree.dump() : std::string());
  return 0;
}

std::map<std::string, std::string> parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pai::ArgumentError("cannot open config '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw pai::ArgumentError("config line " + std::to_string(line_no) +
                               ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw pai::ArgumentError("config key '" + key + "': bad number '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw pai::ArgumentError("config key '" + key + "': bad integer '" + s +
                             "'");
  }
}

// empirical | ppi | ppi++ | coord_partition(coord=1) |
// part(depth=1,min_leaf=2) | part_ols(coord=1,depth=1) |
// paq(degree=1,l1=1,l2=1)
pai::MethodSpec parse_method(const std::string& token) {
  std::string name = token;
  std::map<std::string, std::string> args;
  const auto paren = token.find('(');
  if (paren != std::string::npos) {
    if (token.back() != ')')
      throw pai::ArgumentError("method '" + token + "': missing ')'");
    name = token.substr(0, paren);
    for (const std::string& item : split_list(
             token.substr(paren + 1, token.size() - paren - 2), ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw pai::ArgumentError("method option '" + item +
                                 "' is not key=value");
      args[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }

  using Kind = pai::MethodSpec::Kind;
  pai::MethodSpec m;
  if (name == "empirical") {
    m = pai::make_method(Kind::kEmpirical);
  } else if (name == "ppi") {
    m = pai::make_method(Kind::kPpi);
  } else if (name == "ppi++") {
    m = pai::make_method(Kind::kPpiPp);
  } else if (name == "coord_partition") {
    m = pai::make_method(Kind::kCoordPartition);
  } else if (name == "part") {
    m = pai::make_method(Kind::kPart);
  } else if (name == "part_ols") {
    m = pai::make_method(Kind::kPartOls);
  } else if (name == "paq") {
    m = pai::make_method(Kind::kPaq);
  } else {
    throw pai::ArgumentError("unknown method '" + name + "'");
  }
  m.name = token;
  for (const auto& [key, value] : args) {
    if (key == "depth") {
      m.tree.max_depth = static_cast<int>(to_long(value, key));
    } else if (key == "min_leaf") {
      m.tree.min_leaf = static_cast<int>(to_long(value, key));
    } else if (key == "coord") {
      m.coord = static_cast<int>(to_long(value, key)) - 1;
    } else if (key == "degree") {
      m.quad.degree = static_cast<int>(to_long(value, key));
    } else if (key == "l1") {
      m.quad.deriv_bound_first = to_double(value, key);
    } else if (key == "l2" || key == "l") {
      m.quad.deriv_bound = to_double(value, key);
    } else if (key == "truth") {
      m.truth_override = to_double(value, key);
    } else {
      throw pai::ArgumentError("method '" + name + "': unknown option '" +
                               key + "'");
    }
  }
  return m;
}

int cmd_simulate(const std::string& config_path, int jobs_override) {
  const auto kv = parse_config(config_path);
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    return it == kv.end() ? std::nullopt
                          : std::optional<std::string>(it->second);
  };

  pai::SimConfig cfg;
  if (auto methods = get("methods")) {
    for (const std::string& token : split_list(*methods, ','))
      cfg.methods.push_back(parse_method(token));
  } else {
    throw pai::ArgumentError("config needs 'methods'");
  }
  if (auto grid = get("n_grid")) {
    for (const std::string& item : split_list(*grid, ','))
      cfg.n_grid.push_back(static_cast<std::size_t>(to_long(item, "n_grid")));
  } else {
    throw pai::ArgumentError("config needs 'n_grid'");
  }
  if (auto v = get("replications"))
    cfg.replications = static_cast<int>(to_long(*v, "replications"));
  if (auto v = get("alpha")) cfg.alpha = to_double(*v, "alpha");
  if (auto v = get("seed"))
    cfg.seed = static_cast<std::uint64_t>(to_long(*v, "seed"));
  if (auto v = get("truth")) cfg.truth = to_double(*v, "truth");
  if (auto v = get("jobs")) cfg.jobs = static_cast<int>(to_long(*v, "jobs"));
  if (jobs_override > 0) cfg.jobs = jobs_override;

  if (auto gen = get("generator")) {
    pai::SyntheticSpec spec;
    if (*gen == "sine-residual") {
      spec.tag = pai::GeneratorTag::kSineResidual;
    } else if (*gen == "heteroscedastic-binary") {
      spec.tag = pai::GeneratorTag::kHeteroscedasticBinary;
    } else if (*gen == "linear-income") {
      spec.tag = pai::GeneratorTag::kLinearIncome;
    } else {
      throw pai::ArgumentError("unknown generator '" + *gen + "'");
    }
    if (auto sigma = get("sigma")) spec.sigma = to_double(*sigma, "sigma");
    cfg.synthetic = spec;
    if (auto size = get("pool_size")) {
      cfg.pool_size = static_cast<std::size_t>(to_long(*size, "pool_size"));
    } else {
      throw pai::ArgumentError("synthetic config needs 'pool_size'");
    }
  } else if (auto data = get("data")) {
    std::string schema_text;
    if (auto s = get("schema")) {
      schema_text = *s;
    } else {
      throw pai::ArgumentError("CSV config needs 'schema'");
    }
    cfg.pool = pai::load_dataset(*data, parse_schema(schema_text));
  } else {
    throw pai::ArgumentError("config needs 'generator' or 'data'");
  }

  const pai::SimResult result = pai::run_sweep(cfg);
  const std::string out_path = get("output").value_or("sweep.csv");
  pai::write_sim_csv(result, out_path);
  if (auto prefix = get("plot_prefix"))
    pai::write_plot_data(result, *prefix);

  std::cout << "n,method,mean_width,sd_width,coverage,mean_estimate\n";
  for (const auto& row : result.rows) {
    std::cout << row.n << "," << row.method << ",";
    if (row.valid == 0) {
      std::cout << "NA,NA,NA,NA\n";
    } else {
      std::cout << fmt(row.mean_width) << "," << fmt(row.sd_width) << ","
                << fmt(row.coverage) << "," << fmt(row.mean_estimate) << "\n";
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

struct RateProbeArgs {
  std::string residual = "sine";
  int degree = 1;
  std::vector<int> n_grid = {32, 64, 128, 256, 512};
  int reps = 1000;
  std::uint64_t seed = 0;
  std::string out = "rate_probe.csv";
};

int cmd_rate_probe(const RateProbeArgs& a) {
  std::function<double(double)> r;
  double integral = 0.0;
  if (a.residual == "sine") {
    r = [](double u) { return std::sin(2.0 * std::numbers::pi * u); };
    integral = 0.0;
  } else if (a.residual == "linear") {
    r = [](double u) { return u; };
    integral = 0.5;
  } else {
    throw pai::ArgumentError("unknown residual family '" + a.residual + "'");
  }
  const auto result =
      pai::rate_probe(r, integral, a.degree, a.n_grid, a.reps, a.seed);
  pai::write_rate_probe_csv(result, a.out);
  std::cout << "bias_slope," << fmt(result.bias_slope) << "\n"
            << "variance_slope," << fmt(result.variance_slope) << "\n"
            << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-augmented estimation toolkit"};
  app.require_subcommand(1);

  EstimateMeanArgs mean_args;
  auto* mean_cmd =
      app.add_subcommand("estimate-mean", "Mean estimate with a Wald interval");
  mean_cmd->add_option("--data", mean_args.data, "CSV file")->required();
  mean_cmd
      ->add_option("--schema", mean_args.schema,
                   "features=a,b;label=y;prediction=f")
      ->required();
  mean_cmd->add_option(
      "--method", mean_args.method,
      "empirical | ppi | ppi++ | coord-partition | part | paq");
  mean_cmd->add_option("--alpha", mean_args.alpha, "1 - confidence level");
  mean_cmd->add_option("--depth", mean_args.depth, "part: maximum tree depth");
  mean_cmd->add_option("--min-leaf", mean_args.min_leaf,
                       "part: minimum labeled points per leaf");
  mean_cmd->add_option("--coord", mean_args.coord,
                       "coord-partition: 1-based group coordinate");
  mean_cmd->add_option("--paq-degree", mean_args.paq_degree,
                       "paq: interpolation degree");
  mean_cmd->add_option("--deriv-bounds", mean_args.deriv_bounds,
                       "paq: L1,L2 at degree 1; L above")
      ->delimiter(',');
  mean_cmd->add_flag("--dump-tree", mean_args.dump_tree,
                     "print the fitted tree after the report");
  mean_cmd->add_flag("--global-candidates", mean_args.global_candidates,
                     "candidate thresholds from the full unlabeled pool");
  mean_cmd->add_option("--format", mean_args.format, "json | csv");

  EstimateOlsArgs ols_args;
  auto* ols_cmd = app.add_subcommand(
      "estimate-ols", "OLS coefficient estimate with a Wald interval");
  ols_cmd->add_option("--data", ols_args.data, "CSV file")->required();
  ols_cmd
      ->add_option("--schema", ols_args.schema,
                   "features=a,b;label=y;prediction=f")
      ->required();
  ols_cmd->add_option("--coord", ols_args.coord,
                      "1-based target coordinate");
  ols_cmd->add_option("--alpha", ols_args.alpha, "1 - confidence level");
  ols_cmd->add_option("--depth", ols_args.depth, "maximum tree depth");
  ols_cmd->add_option("--min-leaf", ols_args.min_leaf,
                      "minimum labeled points per leaf");
  ols_cmd->add_flag("--dump-tree", ols_args.dump_tree,
                    "print the fitted tree after the report");
  ols_cmd->add_flag("--global-candidates", ols_args.global_candidates,
                    "candidate thresholds from the full unlabeled pool");
  ols_cmd->add_option("--format", ols_args.format, "json | csv");

  std::string sim_config;
  int sim_jobs = 0;
  auto* sim_cmd =
      app.add_subcommand("simulate", "Replication sweep from a config file");
  sim_cmd->add_option("--config", sim_config, "flat key = value config file")
      ->required();
  sim_cmd->add_option("--jobs", sim_jobs, "worker thread cap (overrides config)");

  RateProbeArgs rate_args;
  auto* rate_cmd = app.add_subcommand(
      "rate-probe", "Monte Carlo bias/variance rates of the quadrature term");
  rate_cmd->add_option("--residual", rate_args.residual, "sine | linear");
  rate_cmd->add_option("--degree", rate_args.degree, "interpolation degree");
  rate_cmd->add_option("--n-grid", rate_args.n_grid, "labeled sizes")
      ->delimiter(',');
  rate_cmd->add_option("--reps", rate_args.reps, "replications per n");
  rate_cmd->add_option("--seed", rate_args.seed, "base seed");
  rate_cmd->add_option("--out", rate_args.out, "output CSV path");

  try {
    app.parse(argc, argv);
    if (mean_cmd->parsed()) return cmd_estimate_mean(mean_args);
    if (ols_cmd->parsed()) return cmd_estimate_ols(ols_args);
    if (sim_cmd->parsed()) return cmd_simulate(sim_config, sim_jobs);
    if (rate_cmd->parsed()) return cmd_rate_probe(rate_args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const pai::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pai::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pai::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
