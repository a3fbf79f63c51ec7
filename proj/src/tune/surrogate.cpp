#include "surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace recbase::detail {

namespace {

double sum_squares(const std::vector<double>& y, const std::vector<std::size_t>& rows, std::size_t begin,
                   std::size_t end) {
  double mean = 0.0;
  for (std::size_t i = begin; i < end; ++i) mean += y[rows[i]];
  mean /= static_cast<double>(end - begin);
  double ss = 0.0;
  for (std::size_t i = begin; i < end; ++i) ss += (y[rows[i]] - mean) * (y[rows[i]] - mean);
  return ss;
}

}  // namespace

void ExtraTrees::fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y, SeededRng& rng) {
  trees_.clear();
  if (x.empty()) return;
  for (std::size_t t = 0; t < n_trees_; ++t) {
    Tree tree;
    std::vector<std::size_t> rows(x.size());
    std::iota(rows.begin(), rows.end(), 0);
    grow(tree, x, y, rows, 0, rows.size(), rng);
    trees_.push_back(std::move(tree));
  }
}

std::size_t ExtraTrees::grow(Tree& tree, const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                             std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                             SeededRng& rng) const {
  const std::size_t id = tree.size();
  tree.emplace_back();
  double mean = 0.0;
  for (std::size_t i = begin; i < end; ++i) mean += y[rows[i]];
  mean /= static_cast<double>(end - begin);
  tree[id].value = mean;
  if (end - begin < min_split_) return id;

  const std::size_t dims = x[rows[begin]].size();
  const double parent = sum_squares(y, rows, begin, end);
  if (parent == 0.0) return id;
  int best_feature = -1;
  double best_threshold = 0.0;
  double best_score = parent;
  // One random threshold per feature; keep the split with the lowest
  // residual sum of squares.
  for (std::size_t f = 0; f < dims; ++f) {
    double lo = x[rows[begin]][f];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, x[rows[i]][f]);
      hi = std::max(hi, x[rows[i]][f]);
    }
    const double threshold = rng.uniform(lo, hi);
    if (!(hi > lo)) continue;
    auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                              rows.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t r) { return x[r][f] < threshold; });
    const auto split = static_cast<std::size_t>(mid - rows.begin());
    if (split == begin || split == end) continue;
    const double score = sum_squares(y, rows, begin, split) + sum_squares(y, rows, split, end);
    if (score < best_score) {
      best_score = score;
      best_feature = static_cast<int>(f);
      best_threshold = threshold;
    }
  }
  if (best_feature < 0) return id;
  auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                            rows.begin() + static_cast<std::ptrdiff_t>(end),
                            [&](std::size_t r) { return x[r][static_cast<std::size_t>(best_feature)] < best_threshold; });
  const auto split = static_cast<std::size_t>(mid - rows.begin());
  tree[id].feature = best_feature;
  tree[id].threshold = best_threshold;
  const std::size_t left = grow(tree, x, y, rows, begin, split, rng);
  const std::size_t right = grow(tree, x, y, rows, split, end, rng);
  tree[id].left = left;
  tree[id].right = right;
  return id;
}

std::pair<double, double> ExtraTrees::predict(const std::vector<double>& x) const {
  if (trees_.empty()) return {0.0, 0.0};
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& tree : trees_) {
    std::size_t node = 0;
    while (tree[node].feature >= 0) {
      node = x[static_cast<std::size_t>(tree[node].feature)] < tree[node].threshold ? tree[node].left : tree[node].right;
    }
    sum += tree[node].value;
    sum_sq += tree[node].value * tree[node].value;
  }
  const auto n = static_cast<double>(trees_.size());
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean))};
}

double expected_improvement(double mean, double sd, double best, double xi) {
  const double gain = mean - best - xi;
  if (sd <= 0.0) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return gain * cdf + sd * pdf;
}

}  // namespace recbase::detail
