#include <cmath>

#include <fmt/format.h>

#include "detail.hpp"

namespace recbase {

Eigen::MatrixXd item_gram(const InteractionMatrix& train) {
  const auto n = static_cast<Eigen::Index>(train.n_items());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  // Column i is filled by item i's users only, so columns are independent.
  parallel_for(train.n_items(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto users = train.item_column(static_cast<Index>(i));
      double* col = g.col(static_cast<Eigen::Index>(i)).data();
      for (std::size_t p = 0; p < users.size(); ++p) {
        const auto items = train.user_row(users.indices[p]);
        for (std::size_t q = 0; q < items.size(); ++q) col[items.indices[q]] += users.values[p] * items.values[q];
      }
    }
  });
  return g;
}

FittedModel fit_ease(const InteractionMatrix& train, double l2_norm, std::optional<std::size_t> memory_budget_bytes) {
  if (!(l2_norm > 0.0) || !std::isfinite(l2_norm)) throw ConfigError("ease: l2_norm must be > 0");
  // Gram matrix, its inverse and the weight matrix.
  detail::check_memory("ease", 3 * detail::dense_square_bytes(train.n_items()), memory_budget_bytes);
  Eigen::MatrixXd g = item_gram(train);
  g.diagonal().array() += l2_norm;
  const auto n = g.rows();
  Eigen::MatrixXd p;
  {
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) throw Error("ease: Gram matrix factorization failed");
    g.resize(0, 0);
    p = llt.solve(Eigen::MatrixXd::Identity(n, n));
  }
  RowMatrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = i == j ? 0.0 : -p(i, j) / p(j, j);
  }
  return FittedModel("ease", {{"l2_norm", l2_norm}}, std::make_shared<const InteractionMatrix>(train),
                     DenseWeightsArtifact{std::move(b)});
}

}  // namespace recbase
