#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "pai/errors.hpp"
#include "pai/paq.hpp"
#include "pai/random.hpp"
#include "pai/stats.hpp"

using namespace pai;

namespace {

std::vector<LabeledSample> labeled_1d(const std::vector<double>& x,
                                      const std::vector<double>& residual) {
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < x.size(); ++i)
    out.push_back({{x[i]}, residual[i], 0.0});
  return out;
}

std::vector<UnlabeledSample> unlabeled_1d(const std::vector<double>& x) {
  std::vector<UnlabeledSample> out;
  for (double v : x) out.push_back({{v}, 0.0});
  return out;
}

}  // namespace

TEST_CASE("nearest_labeled_indices ties go to the lower original index") {
  const std::vector<double> labeled = {0.2, 0.4};
  const auto nn =
      nearest_labeled_indices(labeled, std::vector<double>{0.3, 0.1, 0.5});
  CHECK(nn == std::vector<std::size_t>{0, 0, 1});

  // duplicated positions keep the smallest index
  const std::vector<double> dupes = {0.5, 0.5, 0.5};
  CHECK(nearest_labeled_indices(dupes, std::vector<double>{0.7}) ==
        std::vector<std::size_t>{0});
}

TEST_CASE("paq_nn_estimate hand example") {
  const auto labeled = labeled_1d({0.25, 0.75}, {1.0, 3.0});
  const auto unlabeled = unlabeled_1d({0.1, 0.6, 0.9});
  CHECK(paq_nn_estimate(labeled, unlabeled) == doctest::Approx(7.0 / 3.0));

  // zero residuals: mean of the unlabeled predictions
  auto perfect = labeled;
  for (auto& s : perfect) s.y = s.f;
  auto un = unlabeled;
  un[0].f = 2.0;
  un[1].f = 4.0;
  un[2].f = 6.0;
  CHECK(paq_nn_estimate(perfect, un) == doctest::Approx(4.0));

  // a single labeled point serves every query
  const auto lone = labeled_1d({0.5}, {2.0});
  CHECK(paq_nn_estimate(lone, unlabeled) == doctest::Approx(2.0));

  std::vector<LabeledSample> wide = {{{0.1, 0.2}, 1.0, 0.0}};
  std::vector<UnlabeledSample> wide_un = {{{0.1, 0.2}, 0.0}};
  CHECK_THROWS_AS(paq_nn_estimate(wide, wide_un), ArgumentError);
}

TEST_CASE("paq_trapezoid_form") {
  CHECK(paq_trapezoid_form(std::vector<double>{0.25, 0.75},
                           std::vector<double>{1.0, 3.0}) ==
        doctest::Approx(2.0));
  // weights form a partition of unity
  CHECK(paq_trapezoid_form(std::vector<double>{0.1, 0.3, 0.9},
                           std::vector<double>{5.0, 5.0, 5.0}) ==
        doctest::Approx(5.0));
  CHECK(paq_trapezoid_form(std::vector<double>{0.25, 0.75},
                           std::vector<double>{0.25, 0.75}) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(paq_trapezoid_form(std::vector<double>{-0.5, 0.5},
                                     std::vector<double>{1.0, 1.0}),
                  ArgumentError);
}

TEST_CASE("degree-p quadrature reproduces low-degree polynomials") {
  CHECK(paq_degree_p_residual_term(std::vector<double>{0.2, 0.4, 0.6, 0.8},
                                   std::vector<double>{0.2, 0.4, 0.6, 0.8},
                                   1) == doctest::Approx(0.5));
  std::vector<double> seven(7);
  for (int i = 0; i < 7; ++i) seven[i] = (i + 1) / 8.0;
  std::vector<double> squares(7);
  for (int i = 0; i < 7; ++i) squares[i] = seven[i] * seven[i];
  CHECK(paq_degree_p_residual_term(seven, squares, 2) ==
        doctest::Approx(1.0 / 3.0));
  CHECK(paq_degree_p_residual_term(seven, std::vector<double>(7, 0.0), 2) ==
        doctest::Approx(0.0));
}

TEST_CASE("degree-p quadrature is exact on monomials at random nodes") {
  for (int p : {1, 2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      RandomSource rng(p * 100 + trial, 0);
      std::vector<double> pos(4 * p + 4);
      for (auto& v : pos) v = rng.uniform();
      std::sort(pos.begin(), pos.end());
      for (int q = 0; q <= p; ++q) {
        std::vector<double> vals(pos.size());
        for (std::size_t i = 0; i < pos.size(); ++i)
          vals[i] = std::pow(pos[i], q);
        CHECK(std::abs(paq_degree_p_residual_term(pos, vals, p) -
                       1.0 / (q + 1)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("degree-p quadrature rejects degenerate inputs") {
  CHECK_THROWS_AS(
      paq_degree_p_residual_term(std::vector<double>{0.1, 0.2, 0.3},
                                 std::vector<double>{1, 2, 3}, 1),
      DataError);  // n < 2p + 2
  CHECK_THROWS_AS(
      paq_degree_p_residual_term(std::vector<double>{0.3, 0.3, 0.6, 0.9},
                                 std::vector<double>{1, 2, 3, 4}, 1),
      NumericError);  // duplicate nodes in a block
}

TEST_CASE("pit_positions count rule and boundaries") {
  auto profile = pit_positions(std::vector<double>{0.2},
                               std::vector<double>{0.1, 0.2, 0.3});
  REQUIRE(profile.positions.size() == 1);
  CHECK(profile.positions[0] == doctest::Approx(2.0 / 3.0));

  auto low = pit_positions(std::vector<double>{-5.0},
                           std::vector<double>{0.1, 0.2, 0.3});
  CHECK(low.positions[0] == 0.0);

  // equispaced ranks map to i/n
  const int n = 10;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = (i + 1) / static_cast<double>(n);
  auto ranks = pit_positions(grid, grid);
  for (int i = 0; i < n; ++i)
    CHECK(ranks.positions[i] == doctest::Approx((i + 1.0) / n));
}

TEST_CASE("pit gaps are nonnegative and sum to one") {
  RandomSource rng(12, 0);
  std::vector<double> labeled(25), unlabeled(400);
  for (auto& v : labeled) v = rng.normal();
  for (auto& v : unlabeled) v = rng.normal();
  const auto profile = pit_positions(labeled, unlabeled);
  double total = 0.0;
  for (double g : profile.gaps) {
    CHECK(g >= 0.0);
    total += g;
  }
  CHECK(std::abs(total - 1.0) <= 1e-12);
  CHECK(profile.gaps.size() == profile.positions.size() + 1);
}

TEST_CASE("pit perturbs duplicate positions apart") {
  const auto profile = pit_positions(std::vector<double>{0.5, 0.5, 0.5},
                                     std::vector<double>{0.0, 1.0});
  CHECK(profile.perturbed == 2);
  CHECK(profile.positions[0] < profile.positions[1]);
  CHECK(profile.positions[1] < profile.positions[2]);
}

TEST_CASE("pit is idempotent on already-uniform ranks") {
  const int N = 1000;
  std::vector<double> grid(N);
  for (int i = 0; i < N; ++i) grid[i] = (i + 1) / static_cast<double>(N);
  std::vector<double> sub;
  for (int i = 9; i < N; i += 10) sub.push_back(grid[i]);
  const auto once = pit_positions(sub, grid);
  for (std::size_t i = 0; i < sub.size(); ++i)
    CHECK(std::abs(once.positions[i] - sub[i]) <= 1.0 / N + 1e-12);
}

TEST_CASE("uniform spacing moments match order-statistic theory") {
  std::vector<double> log_n, log_sq;
  for (int n : {16, 32, 64, 128}) {
    double gap_sum = 0.0, sq_sum = 0.0;
    std::size_t count = 0;
    for (int rep = 0; rep < 2000; ++rep) {
      RandomSource rng(13, (static_cast<std::uint64_t>(n) << 32) | rep);
      std::vector<double> u(n);
      for (auto& v : u) v = rng.uniform();
      std::sort(u.begin(), u.end());
      double prev = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double next = i < n ? u[i] : 1.0;
        const double gap = next - prev;
        gap_sum += gap;
        sq_sum += gap * gap;
        ++count;
        prev = next;
      }
    }
    const double mean_gap = gap_sum / count;
    CHECK(mean_gap == doctest::Approx(1.0 / (n + 1)).epsilon(0.02));
    log_n.push_back(std::log(static_cast<double>(n)));
    log_sq.push_back(std::log(sq_sum / count));
  }
  // least-squares slope of log E[gap^2] against log n
  const double mx = mean(log_n), my = mean(log_sq);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    num += (log_n[i] - mx) * (log_sq[i] - my);
    den += (log_n[i] - mx) * (log_n[i] - mx);
  }
  CHECK(num / den == doctest::Approx(-2.0).epsilon(0.1));
}

TEST_CASE("nn residual term matches the trapezoid form under dense sampling") {
  RandomSource rng(14, 0);
  std::vector<double> pos(20);
  for (auto& v : pos) v = rng.uniform();
  std::sort(pos.begin(), pos.end());
  std::vector<double> res(20);
  double max_r = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    res[i] = std::sin(2.0 * std::numbers::pi * pos[i]) + 0.3;
    max_r = std::max(max_r, std::abs(res[i]));
  }
  const int N = 100000;
  std::vector<double> grid(N);
  for (int i = 0; i < N; ++i) grid[i] = (i + 0.5) / N;
  const auto nn = nearest_labeled_indices(pos, grid);
  double nn_term = 0.0;
  for (int i = 0; i < N; ++i) nn_term += res[nn[i]];
  nn_term /= N;
  CHECK(std::abs(nn_term - paq_trapezoid_form(pos, res)) <=
        5.0 * max_r / N);
}

TEST_CASE("paq_ci with zero residuals and zero bounds is a pure Wald interval") {
  std::vector<LabeledSample> labeled;
  RandomSource rng(15, 0);
  for (int i = 0; i < 12; ++i) {
    const double x = rng.uniform();
    labeled.push_back({{x}, x * x, x * x});
  }
  std::vector<UnlabeledSample> unlabeled;
  std::vector<double> f;
  for (int i = 0; i < 300; ++i) {
    const double x = rng.uniform();
    unlabeled.push_back({{x}, x * x});
    f.push_back(x * x);
  }
  QuadratureConfig cfg;
  cfg.deriv_bound = 0.0;
  cfg.deriv_bound_first = 0.0;
  const auto report = paq_ci(labeled, unlabeled, cfg, 0.1);
  CHECK(report.estimate == doctest::Approx(mean(f)));
  const double want =
      normal_quantile(0.95) * std::sqrt(sample_variance(f) / f.size());
  CHECK(report.half_width == doctest::Approx(want));

  QuadratureConfig missing;
  CHECK_THROWS_AS(paq_ci(labeled, unlabeled, missing, 0.1), ArgumentError);
  QuadratureConfig only_l2;
  only_l2.deriv_bound = 1.0;
  CHECK_THROWS_AS(paq_ci(labeled, unlabeled, only_l2, 0.1), ArgumentError);
}

TEST_CASE("degree-1 estimate with pit approximates the sine integral") {
  RandomSource rng(16, 0);
  std::vector<LabeledSample> labeled;
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(0.0, std::numbers::pi);
    labeled.push_back({{x}, x * x + std::sin(x), x * x});
  }
  std::vector<UnlabeledSample> unlabeled;
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.uniform(0.0, std::numbers::pi);
    unlabeled.push_back({{x}, x * x});
  }
  QuadratureConfig cfg;
  const double truth =
      std::numbers::pi * std::numbers::pi / 3.0 + 2.0 / std::numbers::pi;
  CHECK(paq_degree_p_estimate(labeled, unlabeled, cfg) ==
        doctest::Approx(truth).epsilon(0.02));
}

TEST_CASE("rate_probe on a linear residual leaves only boundary noise") {
  const auto result = rate_probe([](double u) { return u; }, 0.5, 1,
                                 std::vector<int>{32, 64, 128}, 2000, 21);
  for (const auto& row : result.rows) {
    CHECK(std::abs(row.mean_bias) <= 5e-3);
  }
  CHECK(result.variance_slope < -2.5);
}

TEST_CASE("rate probe csv layout") {
  const auto result = rate_probe([](double u) { return u; }, 0.5, 1,
                                 std::vector<int>{16, 32}, 50, 0);
  write_rate_probe_csv(result, "paq_probe_test.csv");
  std::ifstream in("paq_probe_test.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,mean_bias,var");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);  // two grid rows plus the slope summary
}
