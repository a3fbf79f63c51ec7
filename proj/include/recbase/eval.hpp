#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "recbase/data.hpp"
#include "recbase/models.hpp"

namespace recbase {

enum class Metric { precision, recall, map, ndcg, mrr, hit_rate };
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

struct MetricRequest {
  std::vector<Metric> metrics;
  std::vector<std::size_t> cutoffs;  // >= 1, strictly increasing

  void validate() const;
  std::size_t size() const noexcept { return metrics.size() * cutoffs.size(); }
  // Position of (metric, cutoff) in metric-major value vectors.
  std::size_t slot(Metric m, std::size_t cutoff) const;
};

// Binary relevance metrics over the first k entries of `ranked`.
//   precision hits / k                  recall  hits / |relevant|
//   hit_rate  1 if any hit              mrr     1 / rank of the first hit
//   ndcg      sum 1/log2(rank+1) over hits, over the same sum for ranks 1..min(k, |relevant|)
//   map       sum over hits of precision at the hit's rank, over min(k, |relevant|)
// `relevant` must be sorted and non-empty. Throws Error when `ranked`
// holds duplicates.
double metric_at_k(std::span<const Index> ranked, std::span<const Index> relevant, std::size_t k, Metric metric);

// Every requested value for one user in a single pass, metric-major.
// `ranked` is assumed duplicate-free.
std::vector<double> user_metrics(std::span<const Index> ranked, std::span<const Index> relevant,
                                 const MetricRequest& request);

enum class Protocol { sampled, full_ranking, user_holdout };
std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view s);

// What to rank and against which ground truth. Pointers are borrowed.
struct EvaluationTask {
  Protocol protocol = Protocol::full_ranking;
  const InteractionMatrix* ground_truth = nullptr;
  // sampled: candidates are the ground-truth items plus these.
  const NegativeSets* negatives = nullptr;
  // user_holdout: input profiles, scored by folding-in.
  const InteractionMatrix* fold_in = nullptr;
  // user_holdout: held-out users to score; other protocols use every user
  // with ground truth.
  std::vector<Index> users;
  // full_ranking: mask train items and, if set, these as well.
  bool exclude_seen = true;
  const InteractionMatrix* also_exclude = nullptr;
};

struct EvaluationReport {
  std::string algorithm;
  Protocol protocol = Protocol::full_ranking;
  MetricRequest request;
  std::vector<double> means;  // metric-major, see MetricRequest::slot
  std::size_t n_users_evaluated = 0;
  std::size_t n_users_skipped_no_ground_truth = 0;
  std::size_t n_users_skipped_no_candidates = 0;
  // Kept when requested, for paired significance tests.
  std::vector<Index> users;
  std::vector<std::vector<double>> per_user;

  double mean(Metric m, std::size_t cutoff) const { return means.at(request.slot(m, cutoff)); }
};

// Users are evaluated in parallel; means are compensated sums taken in user
// order, so results do not depend on the thread count.
EvaluationReport evaluate(const FittedModel& model, const EvaluationTask& task, const MetricRequest& request,
                          bool keep_per_user = false);

// Test items ranked among the bundle's negatives. Users without negatives
// are skipped and counted.
EvaluationReport evaluate_sampled(const FittedModel& model, const SplitBundle& bundle, const MetricRequest& request,
                                  bool keep_per_user = false);
// All items ranked, train items (and validation items if asked) removed.
EvaluationReport evaluate_full_ranking(const FittedModel& model, const SplitBundle& bundle,
                                       const MetricRequest& request, bool exclude_seen = true,
                                       bool exclude_validation = false, bool keep_per_user = false);
// Test users of a user hold-out bundle, scored from their fold-in profiles.
EvaluationReport evaluate_user_holdout(const FittedModel& model, const SplitBundle& bundle,
                                       const MetricRequest& request, bool keep_per_user = false);

// "algorithm,metric,cutoff,value,n_users" rows in report order.
std::string reports_csv(std::span<const EvaluationReport> reports);
void write_reports_csv(const std::filesystem::path& path, std::span<const EvaluationReport> reports);
nlohmann::json to_json(const EvaluationReport& report);
// "user,<metric>@<cutoff>,..." for reports that kept per-user values.
void write_per_user_csv(const std::filesystem::path& path, const EvaluationReport& report);

}  // namespace recbase
