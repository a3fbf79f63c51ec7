#include <algorithm>

#include <fmt/format.h>

#include "detail.hpp"
#include "recbase/rng.hpp"

namespace recbase {

namespace detail {

nlohmann::json to_json(const FoldInConfig& fold_in) {
  nlohmann::json j = {{"fold_in_mode", to_string(fold_in.mode)}};
  if (fold_in.top_k) j["fold_in_topK"] = *fold_in.top_k;
  return j;
}

FactorArtifact make_factor_artifact(Eigen::MatrixXd user_factors, Eigen::MatrixXd item_factors,
                                    const FoldInConfig& fold_in) {
  FactorArtifact a{std::move(user_factors), std::move(item_factors), fold_in, std::nullopt};
  if (fold_in.mode != ColdUserMode::item_similarity || !fold_in.top_k) return a;
  if (*fold_in.top_k == 0) throw ConfigError("fold_in_topK must be >= 1");
  const auto n = static_cast<std::size_t>(a.item_factors.rows());
  const std::size_t k = *fold_in.top_k;
  std::vector<std::vector<std::pair<Index, double>>> rows(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd sims;
    for (std::size_t i = begin; i < end; ++i) {
      sims = a.item_factors * a.item_factors.row(static_cast<Eigen::Index>(i)).transpose();
      auto& row = rows[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (sims[static_cast<Eigen::Index>(j)] != 0.0) row.emplace_back(static_cast<Index>(j), sims[static_cast<Eigen::Index>(j)]);
      }
      select_top_k(row, k);
    }
  });
  CsrBuilder b(n, n);
  for (const auto& row : rows) {
    for (const auto& [j, v] : row) b.push(j, v);
    b.finish_row();
  }
  a.item_similarity = std::move(b).build();
  return a;
}

}  // namespace detail

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

constexpr std::size_t kOversampling = 10;
constexpr int kPowerIterations = 5;

}  // namespace

FittedModel fit_pure_svd(const InteractionMatrix& train, std::size_t num_factors, const FoldInConfig& fold_in,
                         std::uint64_t seed) {
  const std::size_t limit = std::min(train.n_users(), train.n_items());
  if (num_factors == 0 || num_factors > limit) {
    throw ConfigError(fmt::format("puresvd: num_factors must be in [1, {}], got {}", limit, num_factors));
  }
  const CsrMatrix& x = train.by_user();
  const auto width = static_cast<Eigen::Index>(std::min(num_factors + kOversampling, limit));

  SeededRng rng(seed);
  Eigen::MatrixXd omega(static_cast<Eigen::Index>(train.n_items()), width);
  for (Eigen::Index c = 0; c < width; ++c) {
    for (Eigen::Index r = 0; r < omega.rows(); ++r) omega(r, c) = rng.normal();
  }
  Eigen::MatrixXd q = orthonormal_basis(multiply(x, omega));
  for (int it = 0; it < kPowerIterations; ++it) {
    const Eigen::MatrixXd z = orthonormal_basis(multiply_transposed(x, q));
    q = orthonormal_basis(multiply(x, z));
  }
  // X ~ Q B with B^T = X^T Q; the SVD of B^T gives V and Q's rotation.
  const Eigen::MatrixXd bt = multiply_transposed(x, q);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto f = static_cast<Eigen::Index>(num_factors);
  Eigen::MatrixXd items = svd.matrixU().leftCols(f);
  Eigen::MatrixXd users = q * svd.matrixV().leftCols(f) * svd.singularValues().head(f).asDiagonal();

  nlohmann::json hp = detail::to_json(fold_in);
  hp["num_factors"] = num_factors;
  hp["seed"] = seed;
  return FittedModel("puresvd", std::move(hp), std::make_shared<const InteractionMatrix>(train),
                     detail::make_factor_artifact(std::move(users), std::move(items), fold_in));
}

}  // namespace recbase
