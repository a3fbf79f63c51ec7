#include "weighting.hpp"

#include <cmath>

namespace recbase {

namespace detail {

WeightingStats WeightingStats::fit(const CsrMatrix& docs, FeatureWeighting scheme) {
  WeightingStats s;
  s.scheme = scheme;
  if (scheme == FeatureWeighting::none) return s;
  std::vector<std::size_t> df(docs.cols(), 0);
  for (Index c : docs.indices()) ++df[c];
  const auto n_docs = static_cast<double>(docs.rows());
  s.idf.assign(docs.cols(), 0.0);
  for (std::size_t c = 0; c < docs.cols(); ++c) {
    if (df[c] > 0) s.idf[c] = std::log(n_docs / static_cast<double>(df[c]));
  }
  if (scheme == FeatureWeighting::bm25) {
    double total = 0.0;
    for (double v : docs.values()) total += v;
    s.average_length = docs.rows() > 0 ? total / n_docs : 0.0;
  }
  return s;
}

std::vector<std::pair<Index, double>> WeightingStats::apply(SparseRowView doc) const {
  std::vector<std::pair<Index, double>> out;
  out.reserve(doc.size());
  double length_norm = 1.0;
  if (scheme == FeatureWeighting::bm25) {
    double len = 0.0;
    for (double v : doc.values) len += v;
    length_norm = (1.0 - kBm25B) + (average_length > 0.0 ? kBm25B * len / average_length : kBm25B);
  }
  for (std::size_t p = 0; p < doc.size(); ++p) {
    const Index c = doc.indices[p];
    const double w = doc.values[p];
    // Query terms unseen in the corpus carry no idf and vanish.
    const double term_idf = c < idf.size() ? idf[c] : 0.0;
    double v = w;
    switch (scheme) {
      case FeatureWeighting::none:
        break;
      case FeatureWeighting::tfidf:
        v = w * term_idf;
        break;
      case FeatureWeighting::bm25:
        v = w * (kBm25K1 + 1.0) / (w + kBm25K1 * length_norm) * term_idf;
        break;
    }
    if (v != 0.0) out.emplace_back(c, v);
  }
  return out;
}

}  // namespace detail

CsrMatrix apply_feature_weighting(const CsrMatrix& docs, FeatureWeighting scheme) {
  if (scheme == FeatureWeighting::none) return docs;
  const auto stats = detail::WeightingStats::fit(docs, scheme);
  CsrBuilder b(docs.rows(), docs.cols());
  for (std::size_t r = 0; r < docs.rows(); ++r) {
    for (const auto& [c, v] : stats.apply(docs.row(r))) b.push(c, v);
    b.finish_row();
  }
  return std::move(b).build();
}

InteractionMatrix apply_feature_weighting(const InteractionMatrix& m, FeatureWeighting scheme) {
  if (scheme == FeatureWeighting::none) return m;
  const auto stats = detail::WeightingStats::fit(m.by_user(), scheme);
  std::vector<Interaction> out;
  out.reserve(m.nnz());
  for (Index u = 0; u < m.n_users(); ++u) {
    const auto row = m.user_row(u);
    const auto ts = m.user_timestamps(u);
    const auto weighted = stats.apply(row);
    std::size_t p = 0;
    for (const auto& [item, v] : weighted) {
      while (row.indices[p] != item) ++p;
      Interaction e{u, item, v, std::nullopt};
      if (!ts.empty()) e.timestamp = ts[p];
      out.push_back(e);
    }
  }
  return InteractionMatrix::from_interactions(m.n_users(), m.n_items(), std::move(out));
}

}  // namespace recbase
