#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "recbase/common.hpp"
#include "recbase/rng.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

struct Interaction {
  Index user = 0;
  Index item = 0;
  double weight = 1.0;
  std::optional<std::int64_t> timestamp;
};

enum class DuplicatePolicy {
  reject,         // throw on a repeated (user, item) pair
  keep_earliest,  // keep the entry with the smallest timestamp (first seen on ties)
};

// Sparse user x item matrix of positive weights with optional timestamps.
// Stored both user-major and item-major; immutable.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  InteractionMatrix(std::size_t n_users, std::size_t n_items);

  // Throws if an index is out of range, a weight is not strictly positive
  // and finite, or timestamps are present on some entries but not others.
  static InteractionMatrix from_interactions(std::size_t n_users, std::size_t n_items,
                                             std::vector<Interaction> entries,
                                             DuplicatePolicy duplicates = DuplicatePolicy::reject);

  std::size_t n_users() const noexcept { return by_user_.rows(); }
  std::size_t n_items() const noexcept { return by_user_.cols(); }
  std::size_t nnz() const noexcept { return by_user_.nnz(); }
  bool empty() const noexcept { return nnz() == 0; }
  bool has_timestamps() const noexcept { return !timestamps_.empty() || empty(); }

  // Items (sorted) and weights of one user.
  SparseRowView user_row(Index user) const { return by_user_.row(user); }
  // Timestamps aligned with user_row(user); empty span without timestamps.
  std::span<const std::int64_t> user_timestamps(Index user) const;
  // Users (sorted) and weights of one item.
  SparseRowView item_column(Index item) const { return by_item_.row(item); }

  std::size_t user_degree(Index user) const { return by_user_.row_size(user); }
  std::size_t item_degree(Index item) const { return by_item_.row_size(item); }
  bool contains(Index user, Index item) const;

  const CsrMatrix& by_user() const noexcept { return by_user_; }
  const CsrMatrix& by_item() const noexcept { return by_item_; }

  // Sorted by (user, item).
  std::vector<Interaction> interactions() const;

  friend bool operator==(const InteractionMatrix& a, const InteractionMatrix& b) {
    return a.by_user_ == b.by_user_ && a.timestamps_ == b.timestamps_;
  }

 private:
  CsrMatrix by_user_;
  CsrMatrix by_item_;
  std::vector<std::int64_t> timestamps_;  // aligned with by_user_ storage
};

// Sparse entity x feature attribute matrix (item or user content).
struct ContentMatrix {
  CsrMatrix features;  // rows = entities, cols = features

  std::size_t n_entities() const noexcept { return features.rows(); }
  std::size_t n_features() const noexcept { return features.cols(); }
};

// Bidirectional map between raw identifiers in a file and dense indices.
class IdMap {
 public:
  Index intern(const std::string& raw);
  std::optional<Index> find(const std::string& raw) const;
  const std::string& raw(Index index) const { return raw_.at(index); }
  std::size_t size() const noexcept { return raw_.size(); }
  // Keeps only the listed indices, renumbered in the given order.
  IdMap select(std::span<const Index> keep) const;

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, Index> lookup_;
};

// Column layout of a delimiter-separated interaction file. Column positions
// are 0-based. Without a weight column every row has weight 1.
struct ColumnSchema {
  std::string delimiter = "\t";
  int user = 0;
  int item = 1;
  std::optional<int> weight;
  std::optional<int> timestamp;
  bool header = false;

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

struct Dataset {
  InteractionMatrix matrix;
  IdMap users;
  IdMap items;
};

// Reads a (optionally gzip-compressed) delimited file. Duplicate (user, item)
// rows collapse to the earliest timestamp.
Dataset load_interactions(const std::filesystem::path& path, const ColumnSchema& schema);
// Same parser over an in-memory buffer; `source` labels error messages.
Dataset parse_interactions(std::string_view text, const ColumnSchema& schema,
                           const std::string& source = "<memory>");

// Content rows are (entity, feature[, weight]). Entities resolve through
// `entities` (unknown ids are skipped with a warning); features are interned.
ContentMatrix load_content(const std::filesystem::path& path, const ColumnSchema& schema, const IdMap& entities,
                           IdMap* features = nullptr);

// Keeps entries with weight > threshold, rewritten to weight 1.
InteractionMatrix binarize(const InteractionMatrix& m, double threshold);

struct FilterResult {
  InteractionMatrix matrix;
  std::vector<Index> kept_users;  // new index -> old index
  std::vector<Index> kept_items;
};

// Drops users with fewer than `min_user_interactions` and items with fewer
// than `min_item_interactions` entries, then re-compacts indices. Single
// pass applies the user filter and then the item filter once; iterative
// alternates until nothing changes.
FilterResult k_core_filter(const InteractionMatrix& m, std::size_t min_user_interactions,
                           std::size_t min_item_interactions, bool iterative = false);

// Entry-wise union; for pairs present in several inputs the first wins.
InteractionMatrix merge(std::span<const InteractionMatrix* const> parts);
InteractionMatrix merge(const InteractionMatrix& a, const InteractionMatrix& b);
// Keep only the listed users' rows (others become empty).
InteractionMatrix restrict_users(const InteractionMatrix& m, std::span<const Index> users);

// Per-user ordered negative items.
using NegativeSets = std::map<Index, std::vector<Index>>;

struct Provenance {
  std::string splitter;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string dataset_digest;
  std::vector<std::string> warnings;
};

struct SplitBundle {
  InteractionMatrix train;
  std::optional<InteractionMatrix> validation;
  InteractionMatrix test;
  std::optional<NegativeSets> negatives;
  // User hold-out protocol: input profiles of held-out users, and which
  // held-out users are scored against validation vs test ground truth.
  std::optional<InteractionMatrix> fold_in;
  std::vector<Index> validation_users;
  std::vector<Index> test_users;
  Provenance provenance;

  // Throws Error describing the first violated invariant (disjointness,
  // shapes, negative duplicates/overlaps).
  void validate(bool allow_validation_in_train = false) const;
};

SplitBundle split_random_holdout(const InteractionMatrix& m, double test_ratio, const SeededRng& rng);
SplitBundle split_leave_last_out(const InteractionMatrix& m, bool with_validation = false);
SplitBundle split_leave_one_out_random(const InteractionMatrix& m, const SeededRng& rng);
SplitBundle split_user_holdout(const InteractionMatrix& m, std::size_t n_validation_users,
                               std::size_t n_test_users, double profile_ratio, const SeededRng& rng);
SplitBundle split_fixed_per_user(const InteractionMatrix& m, std::size_t per_user, const SeededRng& rng);

// Carves a validation split out of bundle.train with a second splitter,
// whose test part becomes the validation set. `train_split` must have been
// produced from bundle.train.
SplitBundle with_validation_from(SplitBundle bundle, SplitBundle train_split);

// Per user with test items: n distinct items outside train/validation/test.
// Shortfalls are recorded in provenance.warnings.
SplitBundle sample_negatives(SplitBundle bundle, std::size_t n_per_user, const SeededRng& rng);

// SHA-256 over the canonical (user, item, weight, timestamp) listing.
std::string dataset_digest(const InteractionMatrix& m);

// ---- SplitBundle files -----------------------------------------------------
// train.tsv / validation.tsv / test.tsv / fold_in.tsv rows are
// "user<TAB>item<TAB>weight[<TAB>timestamp]" sorted by (user, item);
// negatives.tsv rows are "user<TAB>item" in sampling order; provenance.json
// carries the splitter record.

void write_interactions_tsv(const std::filesystem::path& path, const InteractionMatrix& m);
void write_bundle(const std::filesystem::path& dir, const SplitBundle& bundle, const IdMap* users = nullptr,
                  const IdMap* items = nullptr);
SplitBundle read_bundle(const std::filesystem::path& dir, bool validate = true);
// Raw negatives file: duplicates preserved.
std::vector<std::pair<Index, Index>> read_negative_pairs(const std::filesystem::path& path);
void write_id_map(const std::filesystem::path& path, const IdMap& map);

}  // namespace recbase
