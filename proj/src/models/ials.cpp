#include <cmath>

#include <fmt/format.h>

#include "detail.hpp"
#include "recbase/rng.hpp"

namespace recbase {

std::string_view to_string(Confidence c) { return c == Confidence::linear ? "linear" : "log"; }

Confidence parse_confidence(std::string_view s) {
  if (s == "linear") return Confidence::linear;
  if (s == "log") return Confidence::log;
  throw ConfigError(fmt::format("unknown confidence scaling '{}'", s));
}

void IalsConfig::validate() const {
  if (num_factors == 0) throw ConfigError("ials: num_factors must be >= 1");
  if (!(reg > 0.0) || !std::isfinite(reg)) throw ConfigError("ials: reg must be > 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("ials: alpha must be >= 0");
  if (confidence == Confidence::log && (!(epsilon > 0.0) || !std::isfinite(epsilon))) {
    throw ConfigError("ials: epsilon must be > 0 with log confidence");
  }
}

double ials_confidence(const IalsConfig& cfg, double weight) {
  if (cfg.confidence == Confidence::linear) return 1.0 + cfg.alpha * weight;
  return 1.0 + cfg.alpha * std::log(1.0 + weight / cfg.epsilon);
}

double ials_objective(const InteractionMatrix& train, const IalsConfig& cfg, const Eigen::MatrixXd& user_factors,
                      const Eigen::MatrixXd& item_factors) {
  // Sum over all pairs of (u.v)^2, corrected on the support.
  const Eigen::MatrixXd uu = user_factors.transpose() * user_factors;
  const Eigen::MatrixXd vv = item_factors.transpose() * item_factors;
  CompensatedSum total;
  total.add((uu.array() * vv.array()).sum());
  for (Index u = 0; u < train.n_users(); ++u) {
    const auto row = train.user_row(u);
    for (std::size_t p = 0; p < row.size(); ++p) {
      const double s = user_factors.row(u).dot(item_factors.row(row.indices[p]));
      const double c = ials_confidence(cfg, row.values[p]);
      total.add(c * (1.0 - s) * (1.0 - s) - s * s);
    }
  }
  total.add(cfg.reg * (user_factors.squaredNorm() + item_factors.squaredNorm()));
  return total.value();
}

namespace {

CsrMatrix confidence_excess(const CsrMatrix& m, const IalsConfig& cfg) {
  std::vector<double> values(m.values().size());
  for (std::size_t p = 0; p < values.size(); ++p) values[p] = ials_confidence(cfg, m.values()[p]) - 1.0;
  return CsrMatrix(m.rows(), m.cols(), m.indptr(), m.indices(), std::move(values));
}

Eigen::MatrixXd uniform_init(std::size_t rows, std::size_t cols, SeededRng rng) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(0.0, 0.1);
  }
  return m;
}

}  // namespace

IalsTrainer::IalsTrainer(const InteractionMatrix& train, IalsConfig cfg)
    : train_(std::make_shared<const InteractionMatrix>(train)), cfg_(std::move(cfg)) {
  cfg_.validate();
  confidence_by_user_ = confidence_excess(train_->by_user(), cfg_);
  confidence_by_item_ = confidence_excess(train_->by_item(), cfg_);
  const SeededRng rng(cfg_.seed);
  users_ = uniform_init(train_->n_users(), cfg_.num_factors, rng.derive(0));
  items_ = uniform_init(train_->n_items(), cfg_.num_factors, rng.derive(1));
}

void IalsTrainer::solve_side(const CsrMatrix& rows, const Eigen::MatrixXd& fixed, Eigen::MatrixXd& solved) const {
  const auto f = static_cast<Eigen::Index>(cfg_.num_factors);
  Eigen::MatrixXd base = fixed.transpose() * fixed;
  base.diagonal().array() += cfg_.reg;
  parallel_for(rows.rows(), [&](std::size_t begin, std::size_t end) {
    Eigen::MatrixXd a(f, f);
    Eigen::VectorXd b(f);
    for (std::size_t e = begin; e < end; ++e) {
      const auto row = rows.row(e);
      if (row.empty()) {
        solved.row(static_cast<Eigen::Index>(e)).setZero();
        continue;
      }
      a = base;
      b.setZero();
      for (std::size_t p = 0; p < row.size(); ++p) {
        const auto y = fixed.row(row.indices[p]).transpose();
        const double excess = row.values[p];
        a.selfadjointView<Eigen::Lower>().rankUpdate(y, excess);
        b += (1.0 + excess) * y;
      }
      solved.row(static_cast<Eigen::Index>(e)) = a.selfadjointView<Eigen::Lower>().llt().solve(b).transpose();
    }
  });
}

void IalsTrainer::advance(std::size_t epochs) {
  for (std::size_t e = 0; e < epochs; ++e) {
    solve_side(confidence_by_user_, items_, users_);
    solve_side(confidence_by_item_, users_, items_);
    ++epochs_;
  }
}

FittedModel IalsTrainer::snapshot() const {
  nlohmann::json hp = detail::to_json(cfg_.fold_in);
  hp["num_factors"] = cfg_.num_factors;
  hp["epochs"] = epochs_;
  hp["confidence"] = to_string(cfg_.confidence);
  hp["alpha"] = cfg_.alpha;
  hp["epsilon"] = cfg_.epsilon;
  hp["reg"] = cfg_.reg;
  hp["seed"] = cfg_.seed;
  return FittedModel("ials", std::move(hp), train_, detail::make_factor_artifact(users_, items_, cfg_.fold_in),
                     epochs_);
}

FittedModel fit_ials(const InteractionMatrix& train, const IalsConfig& cfg) {
  IalsTrainer trainer(train, cfg);
  trainer.advance(cfg.epochs);
  return trainer.snapshot();
}

}  // namespace recbase
