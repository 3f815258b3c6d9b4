#include <doctest.h>

#include <cmath>
#include <vector>

#include "pai/baselines.hpp"
#include "pai/errors.hpp"
#include "pai/random.hpp"
#include "pai/stats.hpp"

using namespace pai;

namespace {

std::vector<LabeledSample> labeled_from(std::vector<double> y,
                                        std::vector<double> f) {
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < y.size(); ++i)
    out.push_back({{static_cast<double>(i)}, y[i], f[i]});
  return out;
}

std::vector<UnlabeledSample> unlabeled_from(std::vector<double> f) {
  std::vector<UnlabeledSample> out;
  for (std::size_t i = 0; i < f.size(); ++i)
    out.push_back({{static_cast<double>(i)}, f[i]});
  return out;
}

}  // namespace

TEST_CASE("empirical_mean_ci") {
  auto constant = labeled_from({1, 1, 1}, {0, 0, 0});
  auto r = empirical_mean_ci(constant, 0.05);
  CHECK(r.estimate == doctest::Approx(1.0));
  CHECK(r.half_width == doctest::Approx(0.0));

  auto two = labeled_from({0, 2}, {0, 0});
  auto r2 = empirical_mean_ci(two, 0.05);
  CHECK(r2.estimate == doctest::Approx(1.0));
  CHECK(r2.variance_estimate == doctest::Approx(1.0));

  std::vector<LabeledSample> one = {{{0.0}, 1.0, 0.0}};
  CHECK_THROWS_AS(empirical_mean_ci(one, 0.05), DataError);
}

TEST_CASE("empirical_mean_ci concentrates on large samples") {
  int within = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    RandomSource rng(seed, 0);
    std::vector<LabeledSample> labeled(10000);
    for (auto& s : labeled) s = {{0.0}, rng.normal(), 0.0};
    if (std::abs(empirical_mean_ci(labeled, 0.05).estimate) < 0.05) ++within;
  }
  CHECK(within >= 950);
}

TEST_CASE("ppi_mean_ci toy and reductions") {
  auto labeled = labeled_from({1, 2}, {0.5, 1.5});
  auto unlabeled = unlabeled_from({1, 2, 3});
  auto r = ppi_mean_ci(labeled, unlabeled, 0.05);
  CHECK(r.estimate == doctest::Approx(2.5));

  // zero predictor degenerates to the empirical mean
  auto zero_f = labeled_from({1, 4, 7}, {0, 0, 0});
  auto un_zero = unlabeled_from({0, 0});
  CHECK(ppi_mean_ci(zero_f, un_zero, 0.05).estimate ==
        doctest::Approx(empirical_mean_ci(zero_f, 0.05).estimate));

  // perfect predictor: residual variance term vanishes
  auto perfect = labeled_from({1, 2}, {1, 2});
  auto un = unlabeled_from({3, 5});
  auto rp = ppi_mean_ci(perfect, un, 0.05);
  CHECK(rp.estimate == doctest::Approx(4.0));
  CHECK(rp.variance_estimate ==
        doctest::Approx(sample_variance(std::vector<double>{3, 5}) / 2.0));
}

TEST_CASE("ppi_lambda toy values") {
  auto labeled = labeled_from({0, 2}, {0, 2});
  auto unlabeled = unlabeled_from({0, 2});
  auto lam = ppi_lambda(labeled, unlabeled);
  CHECK(lam.cov_yf == doctest::Approx(2.0));
  CHECK(lam.pooled_var_f == doctest::Approx(4.0 / 3.0));
  CHECK(lam.ratio == doctest::Approx(1.0));
  CHECK(lam.lambda == doctest::Approx(0.75));

  auto uncorrelated = labeled_from({1, 1, 1, 1}, {0, 1, 0, 1});
  CHECK(ppi_lambda(uncorrelated, unlabeled_from({0, 1})).lambda ==
        doctest::Approx(0.0));

  auto constant_f = labeled_from({0, 1}, {2, 2});
  CHECK_THROWS_AS(ppi_lambda(constant_f, unlabeled_from({2, 2})),
                  NumericError);
}

TEST_CASE("ppi_lambda approaches 1 when y = f and N is large") {
  std::vector<double> f;
  RandomSource rng(1, 0);
  for (int i = 0; i < 50; ++i) f.push_back(rng.normal());
  auto labeled = labeled_from(f, f);
  std::vector<double> big;
  for (int i = 0; i < 100000; ++i) big.push_back(f[i % f.size()]);
  CHECK(ppi_lambda(labeled, unlabeled_from(big)).lambda ==
        doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("ppi++ reduction identities") {
  for (int seed = 0; seed < 20; ++seed) {
    RandomSource rng(seed, 0);
    std::vector<LabeledSample> labeled(30);
    for (auto& s : labeled) {
      const double f = rng.normal();
      s = {{0.0}, 0.8 * f + 0.3 * rng.normal(), f};
    }
    std::vector<UnlabeledSample> unlabeled(200);
    for (auto& s : unlabeled) s = {{0.0}, rng.normal()};

    auto at0 = ppi_pp_mean_ci_fixed_lambda(labeled, unlabeled, 0.0, 0.05);
    auto emp = empirical_mean_ci(labeled, 0.05);
    CHECK(std::abs(at0.estimate - emp.estimate) <= 1e-12);
    CHECK(std::abs(at0.half_width - emp.half_width) <= 1e-12);

    auto at1 = ppi_pp_mean_ci_fixed_lambda(labeled, unlabeled, 1.0, 0.05);
    auto ppi = ppi_mean_ci(labeled, unlabeled, 0.05);
    CHECK(std::abs(at1.estimate - ppi.estimate) <= 1e-12);
    CHECK(std::abs(at1.half_width - ppi.half_width) <= 1e-12);
  }
}

TEST_CASE("lambda minimizes the plug-in variance over a grid") {
  for (int seed = 0; seed < 10; ++seed) {
    RandomSource rng(100 + seed, 0);
    std::vector<LabeledSample> labeled(60);
    std::vector<double> ys, fs, pooled;
    for (auto& s : labeled) {
      const double f = rng.normal();
      const double y = 0.7 * f + 0.5 * rng.normal();
      s = {{0.0}, y, f};
      ys.push_back(y);
      fs.push_back(f);
      pooled.push_back(f);
    }
    std::vector<UnlabeledSample> unlabeled(400);
    for (auto& s : unlabeled) {
      s = {{0.0}, rng.normal()};
      pooled.push_back(s.f);
    }
    auto lam = ppi_lambda(labeled, unlabeled);
    const double n = 60.0;
    const double cov = sample_covariance(ys, fs);
    const double pooled_var = sample_variance(pooled);
    const double r = 60.0 / 400.0;
    auto value = [&](double l) {
      return (-2.0 * l * cov + l * l * (1.0 + r) * pooled_var) / n;
    };
    double best = -2.0;
    for (double l = -2.0; l <= 2.0 + 1e-12; l += 0.01) {
      if (value(l) < value(best)) best = l;
    }
    CHECK(std::abs(best - lam.lambda) <= 0.01 + 1e-9);
  }
}

TEST_CASE("ppi++ narrows the empirical interval under strong correlation") {
  int narrower = 0;
  for (int seed = 0; seed < 500; ++seed) {
    RandomSource rng(seed, 3);
    std::vector<LabeledSample> labeled(200);
    for (auto& s : labeled) {
      const double f = rng.normal();
      // corr(y, f) = 0.9
      s = {{0.0}, 0.9 * f + std::sqrt(1.0 - 0.81) * rng.normal(), f};
    }
    std::vector<UnlabeledSample> unlabeled(10000);
    for (auto& s : unlabeled) s = {{0.0}, rng.normal()};
    if (ppi_pp_mean_ci(labeled, unlabeled, 0.05).half_width <=
        empirical_mean_ci(labeled, 0.05).half_width)
      ++narrower;
  }
  CHECK(narrower >= 475);
}

TEST_CASE("coordinate partition estimator") {
  // perfect predictor: interval driven purely by the prediction spread
  std::vector<LabeledSample> labeled = {
      {{-1.0}, 2.0, 2.0}, {{-1.0}, 3.0, 3.0}, {{1.0}, 4.0, 4.0},
      {{1.0}, 5.0, 5.0}};
  std::vector<UnlabeledSample> unlabeled = {
      {{-1.0}, 1.0}, {{1.0}, 2.0}, {{1.0}, 3.0}};
  auto r = coordinate_partition_mean_ci(labeled, unlabeled, 0, 0.05);
  CHECK(r.estimate == doctest::Approx(2.0));
  const double want = normal_quantile(0.975) *
                      std::sqrt(sample_variance(std::vector<double>{1, 2, 3}) /
                                3.0);
  CHECK(r.half_width == doctest::Approx(want));

  std::vector<LabeledSample> ternary = {
      {{0.0}, 0, 0}, {{1.0}, 0, 0}, {{2.0}, 0, 0}, {{2.0}, 0, 0}};
  CHECK_THROWS_AS(
      coordinate_partition_mean_ci(ternary, unlabeled, 0, 0.05),
      ArgumentError);

  std::vector<LabeledSample> lonely_group = {
      {{-1.0}, 1, 0}, {{-1.0}, 2, 0}, {{1.0}, 3, 0}};
  std::vector<UnlabeledSample> both = {{{-1.0}, 0}, {{1.0}, 0}};
  CHECK_THROWS_AS(coordinate_partition_mean_ci(lonely_group, both, 0, 0.05),
                  DataError);
}

TEST_CASE("coordinate partition never inflates variance much over ppi") {
  // both groups share the residual distribution
  std::vector<double> est_c, est_p;
  for (int rep = 0; rep < 3000; ++rep) {
    RandomSource rng(7, rep);
    std::vector<LabeledSample> labeled(100);
    for (auto& s : labeled) {
      const double x = rng.uniform() < 0.5 ? -1.0 : 1.0;
      s = {{x}, rng.normal(), 0.0};
    }
    std::vector<UnlabeledSample> unlabeled(2000);
    for (auto& s : unlabeled)
      s = {{rng.uniform() < 0.5 ? -1.0 : 1.0}, 0.0};
    est_c.push_back(
        coordinate_partition_mean_ci(labeled, unlabeled, 0, 0.05).estimate);
    est_p.push_back(ppi_mean_ci(labeled, unlabeled, 0.05).estimate);
  }
  CHECK(mean(est_c) == doctest::Approx(mean(est_p)).epsilon(0.05));
  CHECK(sample_variance(est_c) <= sample_variance(est_p) * 1.05);
}
