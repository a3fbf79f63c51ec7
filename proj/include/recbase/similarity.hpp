#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recbase/data.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

enum class Measure { cosine, asymmetric_cosine, jaccard, dice, tversky };
enum class FeatureWeighting { none, tfidf, bm25 };
enum class Axis { items, users };

std::string_view to_string(Measure m);
std::string_view to_string(FeatureWeighting w);
std::string_view to_string(Axis a);
Measure parse_measure(std::string_view s);
FeatureWeighting parse_feature_weighting(std::string_view s);
Axis parse_axis(std::string_view s);

// True for jaccard, dice and tversky, which operate on binarized supports.
bool is_set_based(Measure m);

struct SimilarityConfig {
  Measure measure = Measure::cosine;
  std::size_t top_k = 100;
  double shrink = 0.0;
  bool normalize = true;
  double asymmetric_alpha = 0.5;
  double tversky_alpha = 1.0;
  double tversky_beta = 1.0;
  FeatureWeighting feature_weighting = FeatureWeighting::none;

  // Throws ConfigError: top_k == 0, negative shrink, exponents outside
  // [0, 2], or feature weighting combined with a set-based measure.
  void validate() const;
};

// Keys: similarity, topK, shrink, normalize, asymmetric_alpha,
// tversky_alpha, tversky_beta, feature_weighting. Missing keys keep their
// defaults; the result is validated.
nlohmann::json to_json(const SimilarityConfig& cfg);
SimilarityConfig similarity_config_from_json(const nlohmann::json& j);

// Square similarity matrix; row i holds the (at most top_k) neighbours of
// entity i, sorted by index, diagonal excluded.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(CsrMatrix m);

  std::size_t n() const noexcept { return matrix_.rows(); }
  SparseRowView row(std::size_t i) const { return matrix_.row(i); }
  double at(std::size_t i, std::size_t j) const { return matrix_.at(i, j); }
  const CsrMatrix& matrix() const noexcept { return matrix_; }
  std::size_t max_row_size() const;

  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

 private:
  CsrMatrix matrix_;
};

// Rows are documents, columns are terms.
//   tfidf: w * log(n_docs / df(term))
//   bm25:  w * (k1 + 1) / (w + k1 * (1 - b + b * len(doc) / avg_len)) * log(n_docs / df(term))
// with k1 = 1.2, b = 0.75. Entries whose weight becomes 0 are dropped.
InteractionMatrix apply_feature_weighting(const InteractionMatrix& m, FeatureWeighting scheme);
CsrMatrix apply_feature_weighting(const CsrMatrix& rows_as_documents, FeatureWeighting scheme);

// Similarity between the rows of `vectors` (entities x features).
//
//   cosine      x.y / (|x| |y| + shrink)
//   asymmetric  x.y / (|x|^(2a) |y|^(2(1-a)) + shrink)      (x is the row entity)
//   jaccard     |X&Y| / (|X| + |Y| - |X&Y| + shrink)
//   dice        2|X&Y| / (|X| + |Y| + shrink)
//   tversky     |X&Y| / (|X&Y| + a|X\Y| + b|Y\X| + shrink)
//
// Set measures binarize nonzero entries. With normalize == false the
// denominator (shrink included) is dropped. Each output row keeps its top_k
// largest values; ties at the boundary keep the smaller index.
SimilarityMatrix compute_row_similarity(const CsrMatrix& vectors, const SimilarityConfig& cfg);

// Item-item (columns of m) or user-user (rows of m) similarity. Feature
// weighting treats the compared entities as documents.
SimilarityMatrix compute_similarity(const InteractionMatrix& m, Axis axis, const SimilarityConfig& cfg);

// Precomputed kernel for scoring query vectors that are not part of the
// indexed set (cold users of UserKNN).
class SimilarityIndex {
 public:
  SimilarityIndex(CsrMatrix vectors, SimilarityConfig cfg);

  // Similarity of `query` to every indexed row, pruned to top_k. `skip`
  // excludes one indexed row (the query's own, when it is indexed).
  std::vector<std::pair<Index, double>> query(SparseRowView query, std::optional<Index> skip = std::nullopt) const;

  std::size_t size() const noexcept { return vectors_.rows(); }
  const SimilarityConfig& config() const noexcept { return cfg_; }

 private:
  struct Workspace {
    std::vector<double> accumulator;
    std::vector<unsigned char> seen;
    std::vector<Index> touched;
  };
  std::vector<std::pair<Index, double>> weight_query(SparseRowView query) const;
  void query_prepared(std::span<const std::pair<Index, double>> query, std::optional<Index> skip, Workspace& ws,
                      std::vector<std::pair<Index, double>>& out) const;

  SimilarityConfig cfg_;
  std::vector<double> idf_;  // feature weighting statistics of the indexed rows
  double average_length_ = 0.0;
  CsrMatrix vectors_;     // entities x features (binarized for set measures)
  CsrMatrix transposed_;  // features x entities
  std::vector<double> norms_;  // squared l2 norm (or support size for set measures)
  friend SimilarityMatrix compute_row_similarity(const CsrMatrix&, const SimilarityConfig&);
};

// In place: keeps the k largest values (ties: smaller index), then orders
// the survivors by index.
void select_top_k(std::vector<std::pair<Index, double>>& row, std::size_t k);

// Keeps the k largest values of each row (ties: smaller index).
SimilarityMatrix top_k_prune(const SimilarityMatrix& s, std::size_t k);

// Appends content features to the collaborative vectors of the chosen axis,
// scaled by w. For axis items the result is (n_users + n_features) x n_items;
// for axis users it is n_users x (n_items + n_features). Zero-weight entries
// are not stored, so w = 0 reproduces the input exactly.
InteractionMatrix concat_hybrid(const InteractionMatrix& m, const ContentMatrix& c, double w,
                                Axis axis = Axis::items);

// "i<TAB>j<TAB>value" text dump for inspection.
void write_similarity_tsv(const std::filesystem::path& path, const SimilarityMatrix& s);

}  // namespace recbase
