#include "pai/part_mean.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pai/errors.hpp"
#include "pai/stats.hpp"

namespace pai {

Region Region::whole(int dim) {
  Region r;
  r.lower.assign(dim, -std::numeric_limits<double>::infinity());
  r.upper.assign(dim, std::numeric_limits<double>::infinity());
  return r;
}

bool Region::contains(std::span<const double> x) const {
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(x[k] > lower[k] && x[k] <= upper[k])) return false;
  }
  return true;
}

std::vector<double> candidate_splits(std::span<const double> values, int n) {
  if (n < 3) throw ArgumentError("candidate_splits: n must be >= 3");
  const auto q = empirical_quantiles(values, n);
  std::vector<double> mids;
  mids.reserve(q.size());
  for (std::size_t j = 0; j + 1 < q.size(); ++j) {
    if (q[j + 1] > q[j]) mids.push_back(0.5 * (q[j] + q[j + 1]));
  }
  std::sort(mids.begin(), mids.end());
  mids.erase(std::unique(mids.begin(), mids.end()), mids.end());
  return mids;
}

VmsResult vms(const SplitRule& split, const Region& region,
              std::span<const LabeledSample> labeled, const MassFn& mass_fn,
              int min_leaf) {
  const int m = std::max(min_leaf, 2);
  std::vector<double> res_left, res_right;
  for (const auto& s : labeled) {
    if (!region.contains(s.x)) continue;
    if (s.x[split.coord] <= split.threshold)
      res_left.push_back(s.residual());
    else
      res_right.push_back(s.residual());
  }
  if (res_left.size() < static_cast<std::size_t>(m) ||
      res_right.size() < static_cast<std::size_t>(m)) {
    return {false, 0.0};
  }
  Region left = region;
  left.upper[split.coord] = split.threshold;
  Region right = region;
  right.lower[split.coord] = split.threshold;
  const double p_l = mass_fn(left);
  const double p_r = mass_fn(right);
  const double v = p_l * p_l * sample_variance(res_left) / res_left.size() +
                   p_r * p_r * sample_variance(res_right) / res_right.size();
  return {true, v};
}

namespace {

struct Moments {
  std::size_t count = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double v) {
    ++count;
    sum += v;
    sumsq += v * v;
  }
  double variance() const {
    // size-1 denominator, clamped against cancellation
    double v = (sumsq - sum * sum / count) / (count - 1);
    return v > 0.0 ? v : 0.0;
  }
  double mean() const { return sum / count; }
};

struct BestSplit {
  bool found = false;
  SplitRule rule;
  double value = 0.0;
};

class MeanTreeBuilder {
 public:
  MeanTreeBuilder(const Dataset& ds, const TreeOptions& opts)
      : ds_(ds), opts_(opts), m_(std::max(opts.min_leaf, 2)) {
    if (ds.labeled.size() < static_cast<std::size_t>(opts.min_leaf))
      throw ArgumentError("build_tree: n < min_leaf");
    if (opts.max_depth < 0) throw ArgumentError("build_tree: negative depth");
    if (opts_.global_candidates) {
      global_cands_.resize(ds_.dim);
      if (ds_.labeled.size() >= 3) {
        std::vector<double> vals(ds_.N());
        for (int k = 0; k < ds_.dim; ++k) {
          for (std::size_t i = 0; i < ds_.N(); ++i) vals[i] = ds_.unlabeled[i].x[k];
          global_cands_[k] =
              candidate_splits(vals, static_cast<int>(ds_.n()));
        }
      }
    }
  }

  Tree build() {
    std::vector<std::size_t> lab(ds_.n()), unlab(ds_.N());
    for (std::size_t i = 0; i < lab.size(); ++i) lab[i] = i;
    for (std::size_t i = 0; i < unlab.size(); ++i) unlab[i] = i;
    Tree tree;
    tree.depth_limit = opts_.max_depth;
    tree.min_leaf = opts_.min_leaf;
    tree.root = grow(Region::whole(ds_.dim), std::move(lab), std::move(unlab), 0,
                     &tree.leaf_count);
    return tree;
  }

 private:
  std::unique_ptr<TreeNode> grow(Region region, std::vector<std::size_t> lab,
                                 std::vector<std::size_t> unlab, int depth,
                                 int* leaf_count) {
    Moments node;
    for (auto i : lab) node.add(ds_.labeled[i].residual());
    const double p_node =
        static_cast<double>(unlab.size()) / static_cast<double>(ds_.N());

    BestSplit best;
    const bool size_ok = lab.size() >= 2 * static_cast<std::size_t>(m_);
    if (depth < opts_.max_depth && size_ok && ds_.n() >= 3) {
      best = scan_splits(lab, unlab);
    }
    bool make_leaf = !best.found;
    if (best.found && opts_.early_stop) {
      const double own = p_node * p_node * node.variance() / lab.size();
      if (!(best.value < own)) make_leaf = true;
    }

    auto out = std::make_unique<TreeNode>();
    if (make_leaf) {
      LeafStats stats;
      stats.region = region;
      stats.n_leaf = lab.size();
      stats.mean_residual = node.mean();
      stats.var_residual = node.variance();
      stats.mass = p_node;
      out->leaf = std::move(stats);
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

  // Sweep every (coord, threshold) candidate with running left-side moments;
  // coords ascending and thresholds ascending plus a strict < keep the
  // lexicographic tie-break implicit.
  BestSplit scan_splits(const std::vector<std::size_t>& lab,
                        const std::vector<std::size_t>& unlab) {
    BestSplit best;
    const double N = static_cast<double>(ds_.N());
    std::vector<std::pair<double, double>> lab_by_coord;  // (x_k, residual)
    std::vector<double> unlab_vals;
    for (int k = 0; k < ds_.dim; ++k) {
      unlab_vals.clear();
      unlab_vals.reserve(unlab.size());
      for (auto i : unlab) unlab_vals.push_back(ds_.unlabeled[i].x[k]);
      std::sort(unlab_vals.begin(), unlab_vals.end());

      const std::vector<double>& cands =
          opts_.global_candidates ? global_cands_[k]
                                  : local_candidates(unlab_vals, k);
      if (cands.empty()) continue;

      lab_by_coord.clear();
      lab_by_coord.reserve(lab.size());
      for (auto i : lab) {
        lab_by_coord.emplace_back(ds_.labeled[i].x[k], ds_.labeled[i].residual());
      }
      std::sort(lab_by_coord.begin(), lab_by_coord.end());

      Moments total;
      for (const auto& [_, r] : lab_by_coord) total.add(r);
      const double p_total =
          static_cast<double>(unlab.size()) / N;

      Moments left;
      std::size_t li = 0, ui = 0;
      for (double s : cands) {
        while (li < lab_by_coord.size() && lab_by_coord[li].first <= s) {
          left.add(lab_by_coord[li].second);
          ++li;
        }
        while (ui < unlab_vals.size() && unlab_vals[ui] <= s) ++ui;
        const std::size_t n_l = left.count;
        const std::size_t n_r = total.count - n_l;
        if (n_l < static_cast<std::size_t>(m_) ||
            n_r < static_cast<std::size_t>(m_))
          continue;
        Moments right;
        right.count = n_r;
        right.sum = total.sum - left.sum;
        right.sumsq = total.sumsq - left.sumsq;
        const double p_l = static_cast<double>(ui) / N;
        const double p_r = p_total - p_l;
        const double v = p_l * p_l * left.variance() / n_l +
                         p_r * p_r * right.variance() / n_r;
        if (!best.found || v < best.value) {
          best.found = true;
          best.value = v;
          best.rule = {k, s};
        }
      }
    }
    return best;
  }

  const std::vector<double>& local_candidates(
      const std::vector<double>& sorted_unlab_vals, int /*coord*/) {
    scratch_cands_ = sorted_unlab_vals.empty()
                         ? std::vector<double>{}
                         : candidate_splits(sorted_unlab_vals,
                                            static_cast<int>(ds_.n()));
    return scratch_cands_;
  }

  const Dataset& ds_;
  TreeOptions opts_;
  int m_;
  std::vector<std::vector<double>> global_cands_;
  std::vector<double> scratch_cands_;
};

void collect_leaves(const TreeNode* node, std::vector<const LeafStats*>* out) {
  if (node->is_leaf()) {
    out->push_back(&*node->leaf);
    return;
  }
  collect_leaves(node->left.get(), out);
  collect_leaves(node->right.get(), out);
}

void dump_node(const TreeNode* node, int indent, std::ostringstream* os) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (node->is_leaf()) {
    const auto& l = *node->leaf;
    *os << pad << "leaf n=" << l.n_leaf << " mean_residual=" << l.mean_residual
        << " var_residual=" << l.var_residual << " mass=" << l.mass << "\n";
    return;
  }
  *os << pad << "split coord=" << node->split->coord
      << " threshold=" << node->split->threshold << "\n";
  dump_node(node->left.get(), indent + 1, os);
  dump_node(node->right.get(), indent + 1, os);
}

}  // namespace

std::vector<const LeafStats*> Tree::leaves() const {
  std::vector<const LeafStats*> out;
  if (root) collect_leaves(root.get(), &out);
  return out;
}

std::string Tree::dump() const {
  std::ostringstream os;
  os.precision(12);
  if (root) dump_node(root.get(), 0, &os);
  return os.str();
}

Tree build_tree(const Dataset& ds, const TreeOptions& opts) {
  ds.validate();
  return MeanTreeBuilder(ds, opts).build();
}

PartMeanResult part_mean_ci(const Dataset& ds, const TreeOptions& opts,
                            double alpha) {
  Tree tree = build_tree(ds, opts);
  double correction = 0.0;
  double var = 0.0;
  for (const LeafStats* leaf : tree.leaves()) {
    correction += leaf->mass * leaf->mean_residual;
    var += leaf->mass * leaf->mass * leaf->var_residual /
           static_cast<double>(leaf->n_leaf);
  }
  std::vector<double> f;
  f.reserve(ds.N());
  for (const auto& s : ds.unlabeled) f.push_back(s.f);
  if (f.size() >= 2) var += sample_variance(f) / static_cast<double>(f.size());

  PartMeanResult out{make_wald_report(mean(f) + correction, var, alpha, "part",
                                      ds.n(), ds.N()),
                     std::move(tree)};
  out.report.leaf_count = out.tree.leaf_count;
  return out;
}

double coverage_correction(int leaf_cap, std::size_t n, int dim) {
  if (leaf_cap < 1 || n < 2 || dim < 1)
    throw ArgumentError("coverage_correction: need L >= 1, n >= 2, d >= 1");
  const double nd = static_cast<double>(n) * dim;
  return std::sqrt(2.0 * leaf_cap * std::log(nd) / static_cast<double>(n)) +
         std::pow(nd, -static_cast<double>(leaf_cap));
}

}  // namespace pai
