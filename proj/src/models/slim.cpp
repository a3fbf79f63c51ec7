#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "detail.hpp"

namespace recbase {

void SlimConfig::validate() const {
  if (top_k == 0) throw ConfigError("slim: topK must be >= 1");
  if (!(l1_ratio > 0.0 && l1_ratio <= 1.0)) throw ConfigError("slim: l1_ratio must be in (0, 1]");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("slim: alpha must be > 0");
  if (max_iter == 0) throw ConfigError("slim: max_iter must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("slim: tol must be >= 0");
}

namespace {

// Coordinate descent for one target column. Only items co-occurring with the
// target can become nonzero: with nonnegative data and weights the partial
// residual correlation of any other item is <= 0.
class ColumnSolver {
 public:
  ColumnSolver(const Eigen::MatrixXd& gram, const SlimConfig& cfg, double n_rows)
      : gram_(gram), l1_(cfg.alpha * cfg.l1_ratio * n_rows), l2_(cfg.alpha * (1.0 - cfg.l1_ratio) * n_rows), cfg_(cfg) {}

  std::vector<std::pair<Index, double>> solve(Index target) {
    const auto t = static_cast<Eigen::Index>(target);
    candidates_.clear();
    for (Eigen::Index k = 0; k < gram_.rows(); ++k) {
      if (k != t && gram_(k, t) > 0.0) candidates_.push_back(static_cast<Index>(k));
    }
    const std::size_t m = candidates_.size();
    w_.assign(m, 0.0);
    gw_.assign(m, 0.0);  // (G w) restricted to the candidates
    for (std::size_t iter = 0; iter < cfg_.max_iter; ++iter) {
      if (converged(sweep(target, /*active_only=*/false))) break;
      for (std::size_t inner = 0; inner < cfg_.max_iter; ++inner) {
        if (converged(sweep(target, /*active_only=*/true))) break;
      }
    }
    std::vector<std::pair<Index, double>> col;
    for (std::size_t c = 0; c < m; ++c) {
      if (w_[c] > 0.0) col.emplace_back(candidates_[c], w_[c]);
    }
    select_top_k(col, cfg_.top_k);
    return col;
  }

 private:
  struct Progress {
    double max_change = 0.0;
    double max_weight = 0.0;
  };

  bool converged(const Progress& p) const { return p.max_weight == 0.0 || p.max_change <= cfg_.tol * p.max_weight; }

  // The objective is scaled by n_rows so that the Gram entries enter
  // unscaled: minimize 1/2 |x_t - X w|^2 + l1 |w|_1 + l2/2 |w|^2.
  Progress sweep(Index target, bool active_only) {
    const auto t = static_cast<Eigen::Index>(target);
    Progress progress;
    const std::size_t m = candidates_.size();
    for (std::size_t c = 0; c < m; ++c) {
      if (active_only && w_[c] == 0.0) continue;
      const auto k = static_cast<Eigen::Index>(candidates_[c]);
      const double gkk = gram_(k, k);
      const double rho = gram_(k, t) - gw_[c] + gkk * w_[c];
      const double updated = std::max(0.0, rho - l1_) / (gkk + l2_);
      const double delta = updated - w_[c];
      if (delta != 0.0) {
        w_[c] = updated;
        const double* gcol = gram_.col(k).data();
        for (std::size_t d = 0; d < m; ++d) gw_[d] += delta * gcol[candidates_[d]];
        progress.max_change = std::max(progress.max_change, std::abs(delta));
      }
      progress.max_weight = std::max(progress.max_weight, updated);
    }
    return progress;
  }

  const Eigen::MatrixXd& gram_;
  double l1_;
  double l2_;
  const SlimConfig& cfg_;
  std::vector<Index> candidates_;
  std::vector<double> w_;
  std::vector<double> gw_;
};

}  // namespace

FittedModel fit_slim(const InteractionMatrix& train, const SlimConfig& cfg,
                     std::optional<std::size_t> memory_budget_bytes) {
  cfg.validate();
  detail::check_memory("slim", detail::dense_square_bytes(train.n_items()), memory_budget_bytes);
  const Eigen::MatrixXd gram = item_gram(train);
  const std::size_t n = train.n_items();
  std::vector<std::vector<std::pair<Index, double>>> columns(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    ColumnSolver solver(gram, cfg, static_cast<double>(std::max<std::size_t>(train.n_users(), 1)));
    for (std::size_t j = begin; j < end; ++j) columns[j] = solver.solve(static_cast<Index>(j));
  });
  std::vector<Triplet> triplets;
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& [k, v] : columns[j]) triplets.push_back({k, static_cast<Index>(j), v});
  }
  nlohmann::json hp = {{"topK", cfg.top_k}, {"l1_ratio", cfg.l1_ratio}, {"alpha", cfg.alpha}};
  return FittedModel("slim", std::move(hp), std::make_shared<const InteractionMatrix>(train),
                     ItemWeightsArtifact{CsrMatrix::from_triplets(n, n, std::move(triplets))});
}

}  // namespace recbase
