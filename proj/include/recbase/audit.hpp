#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "recbase/data.hpp"

namespace recbase {

// Gini coefficient of nonnegative counts (zeros included):
//   sort ascending, G = 2 sum(i x_i) / (n sum x) - (n + 1) / n, i from 1.
// Throws Error when no count is positive or a count is negative.
double gini(std::span<const double> counts);
// Shannon entropy in bits of the normalized counts; zero counts are ignored.
double shannon_entropy(std::span<const double> counts);

// Items with support in train or test, ordered by train popularity
// descending (ties: smaller index). Each split is normalized by its own
// maximum.
struct PopularityProfile {
  std::vector<Index> items;
  std::vector<double> train_count;
  std::vector<double> test_count;
  std::vector<double> train_normalized;
  std::vector<double> test_normalized;
};

PopularityProfile popularity_profile(const InteractionMatrix& train, const InteractionMatrix& test);
PopularityProfile popularity_profile(const SplitBundle& bundle);

// Statistics are taken over the items with support in train or test, so an
// item missing from one split counts as zero there.
struct SplitAuditReport {
  double gini_train = 0.0;
  double gini_test = 0.0;
  double gini_full = 0.0;
  double entropy_train = 0.0;
  double entropy_test = 0.0;
  double entropy_full = 0.0;
  std::size_t n_items_supported = 0;
  double max_popularity_gap = 0.0;   // max |train_normalized - test_normalized|
  double mean_popularity_gap = 0.0;
  PopularityProfile profile;
};

SplitAuditReport audit_split(const InteractionMatrix& train, const InteractionMatrix& test);
SplitAuditReport audit_split(const SplitBundle& bundle);

// Statistics of the per-item counts of one matrix.
double matrix_gini(const InteractionMatrix& m);
double matrix_entropy(const InteractionMatrix& m);

struct NegativeAuditReport {
  std::optional<std::size_t> target;      // intended negatives per user
  std::size_t n_pairs = 0;                // raw (user, item) rows
  std::size_t duplicate_pairs = 0;        // rows repeating an earlier row
  std::size_t overlap_train = 0;          // distinct pairs that are train entries
  std::size_t overlap_validation = 0;
  std::size_t overlap_test = 0;
  std::size_t users_with_test = 0;
  std::size_t users_below_target = 0;     // users with test items and fewer distinct negatives than target
  std::size_t users_zero_negatives = 0;   // users with test items but no negatives
  std::size_t users_zero_positives = 0;   // users with negatives but no test items
  std::size_t out_of_range = 0;
  std::map<std::size_t, std::size_t> distinct_count_histogram;  // distinct negatives -> users

  std::size_t defects() const noexcept {
    return duplicate_pairs + overlap_train + overlap_validation + overlap_test + users_below_target +
           users_zero_negatives + users_zero_positives + out_of_range;
  }
};

// Audits raw negative pairs (e.g. read from a third-party file) against the
// bundle's train, validation and test entries.
NegativeAuditReport audit_negatives(const SplitBundle& bundle, std::span<const std::pair<Index, Index>> pairs,
                                    std::optional<std::size_t> target = std::nullopt);
// Audits bundle.negatives.
NegativeAuditReport audit_negatives(const SplitBundle& bundle, std::optional<std::size_t> target = std::nullopt);

nlohmann::json to_json(const SplitAuditReport& r);
nlohmann::json to_json(const NegativeAuditReport& r);
// "rank,norm_pop_train,norm_pop_test", rank 0 being the most popular train item.
void write_popularity_csv(const std::filesystem::path& path, const PopularityProfile& profile);

}  // namespace recbase
