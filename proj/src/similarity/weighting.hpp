#pragma once

#include <utility>
#include <vector>

#include "recbase/similarity.hpp"

namespace recbase::detail {

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

// Corpus statistics needed to weight rows of (or queries against) a corpus.
struct WeightingStats {
  FeatureWeighting scheme = FeatureWeighting::none;
  std::vector<double> idf;
  double average_length = 0.0;

  static WeightingStats fit(const CsrMatrix& rows_as_documents, FeatureWeighting scheme);
  // Weighted copy of one document; zero results are dropped.
  std::vector<std::pair<Index, double>> apply(SparseRowView doc) const;
};

}  // namespace recbase::detail
