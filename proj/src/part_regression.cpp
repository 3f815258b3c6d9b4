#include "pai/part_regression.hpp"

#include <algorithm>
#include <cmath>

#include "pai/errors.hpp"
#include "pai/stats.hpp"

namespace pai {

DesignSummary design_summary(std::span<const UnlabeledSample> unlabeled) {
  if (unlabeled.empty()) throw DataError("design_summary: no unlabeled samples");
  const int d = static_cast<int>(unlabeled[0].x.size());
  if (unlabeled.size() < static_cast<std::size_t>(d))
    throw DataError("design_summary: N < d");

  DesignSummary s;
  s.sigma_tilde = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd xf = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd x(d);
  for (const auto& u : unlabeled) {
    for (int k = 0; k < d; ++k) x(k) = u.x[k];
    s.sigma_tilde.noalias() += x * x.transpose();
    xf.noalias() += x * u.f;
  }
  const double N = static_cast<double>(unlabeled.size());
  s.sigma_tilde /= N;
  xf /= N;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.sigma_tilde);
  const double ev_max = eig.eigenvalues().maxCoeff();
  const double ev_min = eig.eigenvalues().minCoeff();
  s.condition = (ev_min > 0.0) ? ev_max / ev_min
                               : std::numeric_limits<double>::infinity();
  if (!(ev_min > 0.0) || s.condition > 1e12) {
    throw NumericError("design_summary: ill-conditioned second moment matrix "
                       "(condition estimate " + std::to_string(s.condition) + ")");
  }
  s.sigma_inv = eig.eigenvectors() *
                eig.eigenvalues().cwiseInverse().asDiagonal() *
                eig.eigenvectors().transpose();
  s.theta_tilde = s.sigma_inv * xf;
  return s;
}

RegionRegressionStats region_regression_stats(
    const Region& region, std::span<const LabeledSample> labeled,
    const DesignSummary& summary) {
  const int d = static_cast<int>(summary.sigma_tilde.rows());
  std::vector<const LabeledSample*> inside;
  for (const auto& s : labeled) {
    if (region.contains(s.x)) inside.push_back(&s);
  }
  if (inside.size() < static_cast<std::size_t>(d + 1))
    throw DataError("region_regression_stats: region holds fewer than d+1 labeled points");

  RegionRegressionStats out;
  out.region = region;
  out.n_region = inside.size();

  Eigen::VectorXd x(d);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(d);
  for (const auto* s : inside) {
    for (int k = 0; k < d; ++k) x(k) = s->x[k];
    score.noalias() += x * s->residual();
  }
  out.r_hat = summary.sigma_inv * score / static_cast<double>(inside.size());

  out.m_hat = Eigen::MatrixXd::Zero(d, d);
  for (const auto* s : inside) {
    for (int k = 0; k < d; ++k) x(k) = s->x[k];
    const double e = s->residual() - x.dot(out.r_hat);
    out.m_hat.noalias() += e * e * x * x.transpose();
  }
  out.m_hat /= static_cast<double>(inside.size() - 1);
  out.v_hat = summary.sigma_inv * out.m_hat * summary.sigma_inv;
  return out;
}

VmsResult vms_lr(const SplitRule& split, const Region& region,
                 std::span<const LabeledSample> labeled,
                 const MassFn& mass_fn, const DesignSummary& summary,
                 int target_coord, int min_leaf) {
  const int d = static_cast<int>(summary.sigma_tilde.rows());
  const int m = std::max(min_leaf, d + 1);
  Region left = region;
  left.upper[split.coord] = split.threshold;
  Region right = region;
  right.lower[split.coord] = split.threshold;

  std::size_t n_l = 0, n_r = 0;
  for (const auto& s : labeled) {
    if (left.contains(s.x)) ++n_l;
    else if (right.contains(s.x)) ++n_r;
  }
  if (n_l < static_cast<std::size_t>(m) || n_r < static_cast<std::size_t>(m))
    return {false, 0.0};

  const auto stats_l = region_regression_stats(left, labeled, summary);
  const auto stats_r = region_regression_stats(right, labeled, summary);
  const double p_l = mass_fn(left);
  const double p_r = mass_fn(right);
  const double v =
      p_l * p_l * stats_l.v_hat(target_coord, target_coord) / n_l +
      p_r * p_r * stats_r.v_hat(target_coord, target_coord) / n_r;
  return {true, v};
}

namespace {

// Running sums that let the split sweep evaluate the projected sandwich
// variance of one side in O(d^2): with w the target column of Sigma^{-1}
// and wx = w.x, V^(k,k) = (A - 2 r_hat.B + r_hat' P r_hat) / (n-1) where
// A = sum res^2 wx^2, B = sum res wx^2 x, P = sum wx^2 x x', and
// r_hat = Sigma^{-1} S1 / n with S1 = sum res x.
struct RegAccum {
  std::size_t count = 0;
  Eigen::VectorXd s1;
  double a = 0.0;
  Eigen::VectorXd b;
  Eigen::MatrixXd p;

  explicit RegAccum(int d)
      : s1(Eigen::VectorXd::Zero(d)),
        b(Eigen::VectorXd::Zero(d)),
        p(Eigen::MatrixXd::Zero(d, d)) {}

  void add(const Eigen::VectorXd& x, double res, double wx) {
    ++count;
    s1.noalias() += res * x;
    const double wx2 = wx * wx;
    a += res * res * wx2;
    b.noalias() += res * wx2 * x;
    p.noalias() += wx2 * x * x.transpose();
  }

  RegAccum minus(const RegAccum& other) const {
    RegAccum out(static_cast<int>(s1.size()));
    out.count = count - other.count;
    out.s1 = s1 - other.s1;
    out.a = a - other.a;
    out.b = b - other.b;
    out.p = p - other.p;
    return out;
  }

  double projected_vkk(const Eigen::MatrixXd& sigma_inv) const {
    const Eigen::VectorXd r_hat = sigma_inv * s1 / static_cast<double>(count);
    double v = (a - 2.0 * r_hat.dot(b) + r_hat.dot(p * r_hat)) /
               static_cast<double>(count - 1);
    return v > 0.0 ? v : 0.0;
  }
};

struct BestSplit {
  bool found = false;
  SplitRule rule;
  double value = 0.0;
};

class RegressionTreeBuilder {
 public:
  RegressionTreeBuilder(const Dataset& ds, const DesignSummary& summary,
                        int target_coord, const TreeOptions& opts)
      : ds_(ds),
        summary_(summary),
        k_(target_coord),
        opts_(opts),
        d_(static_cast<int>(summary.sigma_tilde.rows())),
        m_(std::max(opts.min_leaf, d_ + 1)),
        w_(summary.sigma_inv.col(target_coord)) {}

  Tree build() {
    std::vector<std::size_t> lab(ds_.n()), unlab(ds_.N());
    for (std::size_t i = 0; i < lab.size(); ++i) lab[i] = i;
    for (std::size_t i = 0; i < unlab.size(); ++i) unlab[i] = i;
    Tree tree;
    tree.depth_limit = opts_.max_depth;
    tree.min_leaf = opts_.min_leaf;
    tree.root = grow(Region::whole(d_), std::move(lab), std::move(unlab), 0,
                     &tree.leaf_count);
    return tree;
  }

 private:
  std::unique_ptr<TreeNode> grow(Region region, std::vector<std::size_t> lab,
                                 std::vector<std::size_t> unlab, int depth,
                                 int* leaf_count) {
    BestSplit best;
    const bool size_ok = lab.size() >= 2 * static_cast<std::size_t>(m_);
    if (depth < opts_.max_depth && size_ok && ds_.n() >= 3) {
      best = scan_splits(lab, unlab);
    }

    auto out = std::make_unique<TreeNode>();
    if (!best.found) {
      const auto stats = leaf_regression_stats(lab);
      LeafStats leaf;
      leaf.region = std::move(region);
      leaf.n_leaf = lab.size();
      leaf.mean_residual = stats.first;   // R_hat^(k)
      leaf.var_residual = stats.second;   // V_hat^(k,k)
      leaf.mass = static_cast<double>(unlab.size()) / static_cast<double>(ds_.N());
      out->leaf = std::move(leaf);
      ++*leaf_count;
      return out;
    }

    std::vector<std::size_t> lab_l, lab_r, unlab_l, unlab_r;
    for (auto i : lab) {
      (ds_.labeled[i].x[best.rule.coord] <= best.rule.threshold ? lab_l : lab_r)
          .push_back(i);
    }
    for (auto i : unlab) {
      (ds_.unlabeled[i].x[best.rule.coord] <= best.rule.threshold ? unlab_l
                                                                  : unlab_r)
          .push_back(i);
    }
    Region left = region;
    left.upper[best.rule.coord] = best.rule.threshold;
    Region right = region;
    right.lower[best.rule.coord] = best.rule.threshold;
    out->split = best.rule;
    out->left = grow(std::move(left), std::move(lab_l), std::move(unlab_l),
                     depth + 1, leaf_count);
    out->right = grow(std::move(right), std::move(lab_r), std::move(unlab_r),
                      depth + 1, leaf_count);
    return out;
  }

  std::pair<double, double> leaf_regression_stats(
      const std::vector<std::size_t>& lab) const {
    RegAccum acc(d_);
    Eigen::VectorXd x(d_);
    for (auto i : lab) {
      const auto& s = ds_.labeled[i];
      for (int c = 0; c < d_; ++c) x(c) = s.x[c];
      acc.add(x, s.residual(), w_.dot(x));
    }
    const Eigen::VectorXd r_hat =
        summary_.sigma_inv * acc.s1 / static_cast<double>(acc.count);
    return {r_hat(k_), acc.projected_vkk(summary_.sigma_inv)};
  }

  BestSplit scan_splits(const std::vector<std::size_t>& lab,
                        const std::vector<std::size_t>& unlab) {
    BestSplit best;
    const double N = static_cast<double>(ds_.N());
    struct Row {
      double key;
      std::size_t idx;
    };
    std::vector<Row> order;
    std::vector<double> unlab_vals;
    Eigen::VectorXd x(d_);
    for (int c = 0; c < d_; ++c) {
      unlab_vals.clear();
      unlab_vals.reserve(unlab.size());
      for (auto i : unlab) unlab_vals.push_back(ds_.unlabeled[i].x[c]);
      std::sort(unlab_vals.begin(), unlab_vals.end());
      if (unlab_vals.empty()) continue;
      const auto cands =
          candidate_splits(unlab_vals, static_cast<int>(ds_.n()));
      if (cands.empty()) continue;

      order.clear();
      order.reserve(lab.size());
      for (auto i : lab) order.push_back({ds_.labeled[i].x[c], i});
      std::sort(order.begin(), order.end(),
                [](const Row& a, const Row& b) { return a.key < b.key; });

      RegAccum total(d_);
      for (const auto& row : order) {
        const auto& s = ds_.labeled[row.idx];
        for (int cc = 0; cc < d_; ++cc) x(cc) = s.x[cc];
        total.add(x, s.residual(), w_.dot(x));
      }
      const double p_total = static_cast<double>(unlab.size()) / N;

      RegAccum left(d_);
      std::size_t li = 0, ui = 0;
      for (double s : cands) {
        while (li < order.size() && order[li].key <= s) {
          const auto& pt = ds_.labeled[order[li].idx];
          for (int cc = 0; cc < d_; ++cc) x(cc) = pt.x[cc];
          left.add(x, pt.residual(), w_.dot(x));
          ++li;
        }
        while (ui < unlab_vals.size() && unlab_vals[ui] <= s) ++ui;
        const std::size_t n_l = left.count;
        const std::size_t n_r = total.count - n_l;
        if (n_l < static_cast<std::size_t>(m_) ||
            n_r < static_cast<std::size_t>(m_))
          continue;
        const RegAccum right = total.minus(left);
        const double p_l = static_cast<double>(ui) / N;
        const double p_r = p_total - p_l;
        const double v =
            p_l * p_l * left.projected_vkk(summary_.sigma_inv) / n_l +
            p_r * p_r * right.projected_vkk(summary_.sigma_inv) / n_r;
        if (!best.found || v < best.value) {
          best.found = true;
          best.value = v;
          best.rule = {c, s};
        }
      }
    }
    return best;
  }

  const Dataset& ds_;
  const DesignSummary& summary_;
  int k_;
  TreeOptions opts_;
  int d_;
  int m_;
  Eigen::VectorXd w_;
};

}  // namespace

PartOlsResult part_ols_ci(const Dataset& ds, int target_coord,
                          const TreeOptions& opts, double alpha) {
  ds.validate();
  if (target_coord < 0 || target_coord >= ds.dim)
    throw ArgumentError("part_ols_ci: target coordinate out of range");
  if (ds.n() < 2 * static_cast<std::size_t>(ds.dim + 1))
    throw DataError("part_ols_ci: need n >= 2 (d+1)");

  PartOlsResult out;
  out.summary = design_summary(ds.unlabeled);
  out.tree = RegressionTreeBuilder(ds, out.summary, target_coord, opts).build();

  double correction = 0.0;
  double var = 0.0;
  for (const LeafStats* leaf : out.tree.leaves()) {
    correction += leaf->mass * leaf->mean_residual;
    var += leaf->mass * leaf->mass * leaf->var_residual /
           static_cast<double>(leaf->n_leaf);
    out.leaf_stats.push_back(
        region_regression_stats(leaf->region, ds.labeled, out.summary));
  }

  // finite-N honesty term: sampling variance of theta_tilde^(k)
  std::vector<double> g;
  g.reserve(ds.N());
  Eigen::VectorXd x(ds.dim);
  for (const auto& u : ds.unlabeled) {
    for (int c = 0; c < ds.dim; ++c) x(c) = u.x[c];
    g.push_back((out.summary.sigma_inv * x)(target_coord) * u.f);
  }
  if (g.size() >= 2) var += sample_variance(g) / static_cast<double>(g.size());

  out.report = make_wald_report(
      out.summary.theta_tilde(target_coord) + correction, var, alpha,
      "part_ols", ds.n(), ds.N());
  out.report.leaf_count = out.tree.leaf_count;
  return out;
}

}  // namespace pai
