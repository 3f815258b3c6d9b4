#include <doctest.h>

#include <cmath>
#include <vector>

#include "pai/baselines.hpp"
#include "pai/errors.hpp"
#include "pai/part_mean.hpp"
#include "pai/random.hpp"
#include "pai/stats.hpp"

using namespace pai;

namespace {

Dataset random_dataset(int seed, std::size_t n, std::size_t N, int dim) {
  RandomSource rng(seed, 0);
  Dataset ds;
  ds.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.normal();
    const double f = x[0] + 0.2 * rng.normal();
    ds.labeled.push_back({x, f + std::sin(3.0 * x[0]) + 0.3 * rng.normal(), f});
  }
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.normal();
    ds.unlabeled.push_back({x, x[0] + 0.2 * rng.normal()});
  }
  return ds;
}

MassFn unlabeled_mass(const Dataset& ds) {
  return [&ds](const Region& region) {
    std::size_t inside = 0;
    for (const auto& s : ds.unlabeled)
      if (region.contains(s.x)) ++inside;
    return static_cast<double>(inside) / static_cast<double>(ds.N());
  };
}

}  // namespace

TEST_CASE("candidate_splits midpoint rule") {
  // quantiles of {1,3,5,7} at n=4 are {1,3,5}
  CHECK(candidate_splits(std::vector<double>{1, 3, 5, 7}, 4) ==
        std::vector<double>{2, 4});
  CHECK(candidate_splits(std::vector<double>{2, 2, 2, 2}, 4).empty());
  CHECK_THROWS_AS(candidate_splits(std::vector<double>{1, 2}, 2),
                  ArgumentError);
}

TEST_CASE("candidate_splits tracks quantiles of a uniform sample") {
  RandomSource rng(4, 0);
  std::vector<double> values(100000);
  for (auto& v : values) v = rng.uniform();
  const auto mids = candidate_splits(values, 5);
  REQUIRE(mids.size() == 3);
  CHECK(mids[0] == doctest::Approx(0.3).epsilon(0.07));
  CHECK(mids[1] == doctest::Approx(0.5).epsilon(0.04));
  CHECK(mids[2] == doctest::Approx(0.7).epsilon(0.03));
}

TEST_CASE("vms hand example") {
  std::vector<LabeledSample> labeled = {
      {{0.0}, 0.0, 0.0}, {{0.1}, 2.0, 0.0},   // left residuals {0, 2}
      {{1.0}, 1.0, 0.0}, {{1.1}, 1.0, 0.0}};  // right residuals {1, 1}
  const Region whole = Region::whole(1);
  MassFn half = [](const Region&) { return 0.5; };
  const auto result = vms({0, 0.5}, whole, labeled, half, 2);
  REQUIRE(result.feasible);
  CHECK(result.value == doctest::Approx(0.25));

  // identical residuals: zero criterion
  std::vector<LabeledSample> flat = labeled;
  for (auto& s : flat) s.y = 1.0;
  CHECK(vms({0, 0.5}, whole, flat, half, 2).value == doctest::Approx(0.0));

  // one labeled point on a side is infeasible at m = 2
  CHECK_FALSE(vms({0, 0.05}, whole, labeled, half, 2).feasible);
}

TEST_CASE("build_tree depth zero is a single full-mass leaf") {
  Dataset ds = random_dataset(1, 20, 100, 2);
  TreeOptions opts;
  opts.max_depth = 0;
  Tree tree = build_tree(ds, opts);
  REQUIRE(tree.leaf_count == 1);
  const auto leaves = tree.leaves();
  REQUIRE(leaves.size() == 1);
  CHECK(leaves[0]->mass == doctest::Approx(1.0));
  CHECK(leaves[0]->n_leaf == 20);
}

TEST_CASE("build_tree splits a binary coordinate at its midpoint") {
  RandomSource rng(2, 0);
  Dataset ds;
  ds.dim = 1;
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform() < 0.5 ? -1.0 : 1.0;
    ds.labeled.push_back({{x}, x + rng.normal(), 0.0});
  }
  for (int i = 0; i < 1000; ++i)
    ds.unlabeled.push_back({{rng.uniform() < 0.5 ? -1.0 : 1.0}, 0.0});
  TreeOptions opts;
  opts.max_depth = 1;
  Tree tree = build_tree(ds, opts);
  REQUIRE(tree.root != nullptr);
  REQUIRE_FALSE(tree.root->is_leaf());
  CHECK(tree.root->split->coord == 0);
  CHECK(tree.root->split->threshold == doctest::Approx(0.0));
  CHECK(tree.leaf_count == 2);
}

// The split criterion keys on residual-mean heterogeneity: with equal group
// means, the mass-weighted within-group variance sum equals the total second
// moment whatever the cut, so a pure variance jump leaves its expectation
// flat in the threshold. A mean jump is what it can localize.
TEST_CASE("build_tree finds a residual-mean boundary") {
  int close = 0;
  for (int seed = 0; seed < 50; ++seed) {
    RandomSource rng(seed, 1);
    Dataset ds;
    ds.dim = 1;
    for (int i = 0; i < 500; ++i) {
      const double x = rng.uniform();
      const double shift = x < 0.5 ? -1.0 : 1.0;
      ds.labeled.push_back({{x}, shift + rng.normal(), 0.0});
    }
    for (int i = 0; i < 5000; ++i) ds.unlabeled.push_back({{rng.uniform()}, 0.0});
    TreeOptions opts;
    opts.max_depth = 1;
    Tree tree = build_tree(ds, opts);
    if (!tree.root->is_leaf() &&
        std::abs(tree.root->split->threshold - 0.5) < 0.1)
      ++close;
  }
  CHECK(close >= 45);
}

TEST_CASE("greedy split matches an exhaustive re-scan") {
  for (int seed = 0; seed < 10; ++seed) {
    Dataset ds = random_dataset(300 + seed, 80, 600, 2);
    TreeOptions opts;
    opts.max_depth = 1;
    Tree tree = build_tree(ds, opts);
    REQUIRE_FALSE(tree.root->is_leaf());
    const SplitRule chosen = *tree.root->split;
    const Region whole = Region::whole(ds.dim);
    const MassFn mass = unlabeled_mass(ds);

    double best = 0.0;
    bool found = false;
    SplitRule best_rule;
    for (int k = 0; k < ds.dim; ++k) {
      std::vector<double> vals;
      for (const auto& s : ds.unlabeled) vals.push_back(s.x[k]);
      for (double t : candidate_splits(vals, static_cast<int>(ds.n()))) {
        const auto r = vms({k, t}, whole, ds.labeled, mass, opts.min_leaf);
        if (!r.feasible) continue;
        if (!found || r.value < best) {
          found = true;
          best = r.value;
          best_rule = {k, t};
        }
      }
    }
    REQUIRE(found);
    CHECK(chosen.coord == best_rule.coord);
    CHECK(chosen.threshold == doctest::Approx(best_rule.threshold));
    const auto chosen_value =
        vms(chosen, whole, ds.labeled, mass, opts.min_leaf);
    CHECK(chosen_value.value <= best + 1e-9);
  }
}

TEST_CASE("tree partition conserves mass and labeled counts") {
  Dataset ds = random_dataset(9, 200, 2000, 3);
  TreeOptions opts;
  opts.max_depth = 3;
  Tree tree = build_tree(ds, opts);
  double mass = 0.0;
  std::size_t count = 0;
  for (const LeafStats* leaf : tree.leaves()) {
    mass += leaf->mass;
    count += leaf->n_leaf;
    CHECK(leaf->n_leaf >= 2);
  }
  CHECK(std::abs(mass - 1.0) <= 1e-12);
  CHECK(count == ds.n());
}

TEST_CASE("depth-zero part_mean_ci reduces to ppi") {
  for (int seed = 0; seed < 100; ++seed) {
    Dataset ds = random_dataset(seed, 40, 300, 2);
    TreeOptions opts;
    opts.max_depth = 0;
    const auto part = part_mean_ci(ds, opts, 0.05);
    const auto ppi = ppi_mean_ci(ds.labeled, ds.unlabeled, 0.05);
    CHECK(std::abs(part.report.estimate - ppi.estimate) <= 1e-10);
    CHECK(std::abs(part.report.half_width - ppi.half_width) <= 1e-10);
  }
}

TEST_CASE("constant residuals give a pure prediction-spread interval") {
  Dataset ds = random_dataset(5, 30, 200, 1);
  for (auto& s : ds.labeled) s.y = s.f + 3.0;
  TreeOptions opts;
  opts.max_depth = 2;
  const auto result = part_mean_ci(ds, opts, 0.05);
  std::vector<double> f;
  for (const auto& s : ds.unlabeled) f.push_back(s.f);
  CHECK(result.report.estimate == doctest::Approx(mean(f) + 3.0));
  const double want =
      normal_quantile(0.975) * std::sqrt(sample_variance(f) / ds.N());
  CHECK(result.report.half_width == doctest::Approx(want));
}

TEST_CASE("early stopping never splits beyond an improving criterion") {
  Dataset ds = random_dataset(6, 100, 800, 2);
  TreeOptions stop;
  stop.max_depth = 4;
  stop.early_stop = true;
  TreeOptions plain = stop;
  plain.early_stop = false;
  CHECK(build_tree(ds, stop).leaf_count <=
        build_tree(ds, plain).leaf_count);
}

TEST_CASE("tree dump mentions splits and leaves") {
  Dataset ds = random_dataset(7, 60, 400, 2);
  TreeOptions opts;
  opts.max_depth = 1;
  Tree tree = build_tree(ds, opts);
  const std::string dump = tree.dump();
  CHECK(dump.find("split coord=") != std::string::npos);
  CHECK(dump.find("leaf n=") != std::string::npos);
  CHECK(dump.find("mass=") != std::string::npos);
}

TEST_CASE("coverage_correction values and monotonicity") {
  // sqrt(2*2*log(3000)/1000) + 3000^-2, frozen
  CHECK(coverage_correction(2, 1000, 3) ==
        doctest::Approx(0.178957).epsilon(1e-3));
  CHECK(std::abs(coverage_correction(2, 1000, 3) -
                 (std::sqrt(4.0 * std::log(3000.0) / 1000.0) +
                  std::pow(3000.0, -2.0))) <= 1e-12);
  CHECK(coverage_correction(1, 1000000000000ull, 1) < 1e-4);
  CHECK(coverage_correction(4, 500, 2) > coverage_correction(2, 500, 2));
  CHECK_THROWS_AS(coverage_correction(0, 100, 1), ArgumentError);
}
