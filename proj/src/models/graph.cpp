#include <cmath>

#include <fmt/format.h>

#include "recbase/models.hpp"

namespace recbase {

namespace {

// Rows of `m` with every weight raised to alpha, then scaled to sum to 1.
CsrMatrix transition(const CsrMatrix& m, double alpha) {
  std::vector<double> values(m.values().size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::size_t begin = m.indptr()[r];
    const std::size_t end = m.indptr()[r + 1];
    double total = 0.0;
    for (std::size_t p = begin; p < end; ++p) {
      values[p] = std::pow(m.values()[p], alpha);
      if (!std::isfinite(values[p])) throw ConfigError(fmt::format("graph model: weight^{} is not finite", alpha));
      total += values[p];
    }
    for (std::size_t p = begin; p < end; ++p) values[p] /= total;
  }
  return CsrMatrix(m.rows(), m.cols(), m.indptr(), m.indices(), std::move(values));
}

FittedModel fit_graph(std::string kind, const InteractionMatrix& train, std::size_t top_k, double alpha,
                      double beta, bool normalize_similarity) {
  if (top_k == 0) throw ConfigError(fmt::format("{}: topK must be >= 1", kind));
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError(fmt::format("{}: alpha must be >= 0", kind));
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError(fmt::format("{}: beta must be >= 0", kind));
  const CsrMatrix user_to_item = transition(train.by_user(), alpha);
  const CsrMatrix item_to_user = transition(train.by_item(), alpha);
  const std::size_t n = train.n_items();

  std::vector<double> penalty(n, 1.0);
  if (beta != 0.0) {
    for (Index j = 0; j < n; ++j) {
      const auto pop = static_cast<double>(train.item_degree(j));
      penalty[j] = pop > 0.0 ? std::pow(pop, beta) : 1.0;
    }
  }

  std::vector<std::vector<std::pair<Index, double>>> rows(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(n, 0.0);
    std::vector<unsigned char> seen(n, 0);
    std::vector<Index> touched;
    for (std::size_t i = begin; i < end; ++i) {
      const auto users = item_to_user.row(i);
      for (std::size_t p = 0; p < users.size(); ++p) {
        const auto items = user_to_item.row(users.indices[p]);
        for (std::size_t q = 0; q < items.size(); ++q) {
          const Index j = items.indices[q];
          if (!seen[j]) {
            seen[j] = 1;
            touched.push_back(j);
          }
          acc[j] += users.values[p] * items.values[q];
        }
      }
      auto& row = rows[i];
      for (Index j : touched) {
        double v = acc[j];
        acc[j] = 0.0;
        seen[j] = 0;
        if (j == i || v == 0.0) continue;
        if (beta != 0.0) v /= penalty[j];
        row.emplace_back(j, v);
      }
      touched.clear();
      select_top_k(row, top_k);
      if (normalize_similarity) {
        double total = 0.0;
        for (const auto& e : row) total += e.second;
        if (total > 0.0) {
          for (auto& e : row) e.second /= total;
        }
      }
    }
  });

  CsrBuilder b(n, n);
  for (const auto& row : rows) {
    for (const auto& [j, v] : row) b.push(j, v);
    b.finish_row();
  }
  nlohmann::json hp = {{"topK", top_k}, {"alpha", alpha}, {"normalize_similarity", normalize_similarity}};
  if (kind == "rp3beta") hp["beta"] = beta;
  return FittedModel(std::move(kind), std::move(hp), std::make_shared<const InteractionMatrix>(train),
                     ItemWeightsArtifact{std::move(b).build()});
}

}  // namespace

FittedModel fit_p3alpha(const InteractionMatrix& train, std::size_t top_k, double alpha, bool normalize_similarity) {
  return fit_graph("p3alpha", train, top_k, alpha, 0.0, normalize_similarity);
}

FittedModel fit_rp3beta(const InteractionMatrix& train, std::size_t top_k, double alpha, double beta,
                        bool normalize_similarity) {
  return fit_graph("rp3beta", train, top_k, alpha, beta, normalize_similarity);
}

}  // namespace recbase
