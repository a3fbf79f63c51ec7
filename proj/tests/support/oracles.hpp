#pragma once

// Deliberately naive dense reference implementations. Nothing here shares
// code with the library beyond the input types.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "recbase/data.hpp"
#include "recbase/eval.hpp"
#include "recbase/similarity.hpp"

namespace oracle {

using recbase::Index;
using Eigen::MatrixXd;

inline MatrixXd dense(const recbase::InteractionMatrix& m) {
  MatrixXd d = MatrixXd::Zero(static_cast<Eigen::Index>(m.n_users()), static_cast<Eigen::Index>(m.n_items()));
  for (const auto& e : m.interactions()) d(e.user, e.item) = e.weight;
  return d;
}

inline MatrixXd dense(const recbase::CsrMatrix& m) {
  MatrixXd d = MatrixXd::Zero(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (const auto& t : m.triplets()) d(t.row, t.col) = t.value;
  return d;
}

// Rows are documents.
inline MatrixXd weighting(const MatrixXd& docs, recbase::FeatureWeighting scheme) {
  if (scheme == recbase::FeatureWeighting::none) return docs;
  const double n_docs = static_cast<double>(docs.rows());
  std::vector<double> idf(static_cast<std::size_t>(docs.cols()), 0.0);
  for (Eigen::Index c = 0; c < docs.cols(); ++c) {
    double df = 0;
    for (Eigen::Index r = 0; r < docs.rows(); ++r) df += docs(r, c) != 0.0 ? 1 : 0;
    if (df > 0) idf[static_cast<std::size_t>(c)] = std::log(n_docs / df);
  }
  double avg_len = docs.sum() / n_docs;
  MatrixXd out = MatrixXd::Zero(docs.rows(), docs.cols());
  for (Eigen::Index r = 0; r < docs.rows(); ++r) {
    const double len = docs.row(r).sum();
    for (Eigen::Index c = 0; c < docs.cols(); ++c) {
      const double tf = docs(r, c);
      if (tf == 0.0) continue;
      const double term_idf = idf[static_cast<std::size_t>(c)];
      if (scheme == recbase::FeatureWeighting::tfidf) {
        out(r, c) = tf * term_idf;
      } else {
        const double k1 = 1.2, b = 0.75;
        out(r, c) = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg_len)) * term_idf;
      }
    }
  }
  return out;
}

// Unpruned similarity between rows; 0 on the diagonal and where the supports
// do not overlap.
inline MatrixXd similarity(const MatrixXd& raw, const recbase::SimilarityConfig& cfg) {
  using recbase::Measure;
  const bool set_based = cfg.measure == Measure::jaccard || cfg.measure == Measure::dice ||
                         cfg.measure == Measure::tversky;
  MatrixXd x = set_based ? MatrixXd((raw.array() != 0.0).cast<double>()) : weighting(raw, cfg.feature_weighting);
  const Eigen::Index n = x.rows();
  MatrixXd s = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (Eigen::Index f = 0; f < x.cols(); ++f) {
        dot += x(i, f) * x(j, f);
        ni += x(i, f) * x(i, f);
        nj += x(j, f) * x(j, f);
      }
      if (dot == 0.0) continue;
      double num = cfg.measure == Measure::dice ? 2.0 * dot : dot;
      if (!cfg.normalize) {
        s(i, j) = num;
        continue;
      }
      double den = 0.0;
      switch (cfg.measure) {
        case Measure::cosine: den = std::sqrt(ni) * std::sqrt(nj); break;
        case Measure::asymmetric_cosine:
          den = std::pow(std::sqrt(ni), 2.0 * cfg.asymmetric_alpha) *
                std::pow(std::sqrt(nj), 2.0 * (1.0 - cfg.asymmetric_alpha));
          break;
        case Measure::jaccard: den = ni + nj - dot; break;
        case Measure::dice: den = ni + nj; break;
        case Measure::tversky: den = dot + cfg.tversky_alpha * (ni - dot) + cfg.tversky_beta * (nj - dot); break;
      }
      den += cfg.shrink;
      if (den > 0.0) s(i, j) = num / den;
    }
  }
  return s;
}

// Row-stochastic transition matrix of the weights raised to alpha.
inline MatrixXd transition(const MatrixXd& w, double alpha) {
  MatrixXd p = MatrixXd::Zero(w.rows(), w.cols());
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      if (w(r, c) != 0.0) total += std::pow(w(r, c), alpha);
    }
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      if (w(r, c) != 0.0) p(r, c) = std::pow(w(r, c), alpha) / total;
    }
  }
  return p;
}

// item -> user -> item walk probabilities, target column divided by
// popularity^beta, diagonal removed. No pruning.
inline MatrixXd random_walk(const MatrixXd& x, double alpha, double beta) {
  const MatrixXd user_to_item = transition(x, alpha);
  const MatrixXd item_to_user = transition(x.transpose(), alpha);
  MatrixXd s = MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (i == j) continue;
      double v = 0.0;
      for (Eigen::Index u = 0; u < x.rows(); ++u) v += item_to_user(i, u) * user_to_item(u, j);
      double pop = 0.0;
      for (Eigen::Index u = 0; u < x.rows(); ++u) pop += x(u, j) != 0.0 ? 1.0 : 0.0;
      if (beta != 0.0 && pop > 0.0) v /= std::pow(pop, beta);
      s(i, j) = v;
    }
  }
  return s;
}

// Residual-form cyclic coordinate descent for one target column of
//   1/(2n) |x_j - X w|^2 + alpha rho |w|_1 + alpha (1 - rho)/2 |w|^2,  w >= 0, w_j = 0.
inline Eigen::VectorXd slim_column(const MatrixXd& x, Eigen::Index target, double l1_ratio, double alpha) {
  const double n = static_cast<double>(x.rows());
  const double l1 = alpha * l1_ratio;
  const double l2 = alpha * (1.0 - l1_ratio);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd residual = x.col(target);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      if (k == target) continue;
      const double sq = x.col(k).squaredNorm() / n;
      if (sq == 0.0) continue;
      const double z = x.col(k).dot(residual) / n + sq * w(k);
      const double updated = std::max(0.0, z - l1) / (sq + l2);
      if (updated != w(k)) {
        residual -= (updated - w(k)) * x.col(k);
        change = std::max(change, std::abs(updated - w(k)));
        w(k) = updated;
      }
    }
    if (change < 1e-15) break;
  }
  return w;
}

// Column j solves an ordinary ridge regression on the other columns, which
// is the diag(B) = 0 constrained problem written without multipliers.
inline MatrixXd ease(const MatrixXd& x, double l2) {
  const Eigen::Index n = x.cols();
  MatrixXd b = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    MatrixXd others(x.rows(), n - 1);
    for (Eigen::Index k = 0, c = 0; k < n; ++k) {
      if (k != j) others.col(c++) = x.col(k);
    }
    const MatrixXd lhs = others.transpose() * others + l2 * MatrixXd::Identity(n - 1, n - 1);
    const Eigen::VectorXd coef = lhs.ldlt().solve(others.transpose() * x.col(j));
    for (Eigen::Index k = 0, c = 0; k < n; ++k) {
      if (k != j) b(k, j) = coef(c++);
    }
  }
  return b;
}

inline double ials_objective(const MatrixXd& r, const MatrixXd& confidence, const MatrixXd& users,
                             const MatrixXd& items, double reg) {
  double total = 0.0;
  for (Eigen::Index u = 0; u < r.rows(); ++u) {
    for (Eigen::Index i = 0; i < r.cols(); ++i) {
      const double p = r(u, i) != 0.0 ? 1.0 : 0.0;
      const double c = r(u, i) != 0.0 ? confidence(u, i) : 1.0;
      const double e = p - users.row(u).dot(items.row(i));
      total += c * e * e;
    }
  }
  return total + reg * (users.squaredNorm() + items.squaredNorm());
}

inline double metric(const std::vector<Index>& ranked, const std::vector<Index>& relevant, std::size_t k,
                     recbase::Metric m) {
  using recbase::Metric;
  const std::set<Index> rel(relevant.begin(), relevant.end());
  const std::size_t depth = std::min(k, ranked.size());
  std::vector<bool> hit(depth);
  for (std::size_t r = 0; r < depth; ++r) hit[r] = rel.count(ranked[r]) > 0;
  const double hits = static_cast<double>(std::count(hit.begin(), hit.end(), true));
  switch (m) {
    case Metric::precision: return hits / static_cast<double>(k);
    case Metric::recall: return hits / static_cast<double>(rel.size());
    case Metric::hit_rate: return hits > 0 ? 1.0 : 0.0;
    case Metric::mrr:
      for (std::size_t r = 0; r < depth; ++r) {
        if (hit[r]) return 1.0 / static_cast<double>(r + 1);
      }
      return 0.0;
    case Metric::ndcg: {
      double dcg = 0.0, ideal = 0.0;
      for (std::size_t r = 0; r < depth; ++r) {
        if (hit[r]) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      }
      for (std::size_t r = 0; r < std::min(k, rel.size()); ++r) ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      return dcg / ideal;
    }
    case Metric::map: {
      double sum = 0.0, seen = 0.0;
      for (std::size_t r = 0; r < depth; ++r) {
        if (!hit[r]) continue;
        seen += 1.0;
        sum += seen / static_cast<double>(r + 1);
      }
      return sum / static_cast<double>(std::min(k, rel.size()));
    }
  }
  return 0.0;
}

}  // namespace oracle
