#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "recbase/eval.hpp"

namespace recbase {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::precision: return "precision";
    case Metric::recall: return "recall";
    case Metric::map: return "map";
    case Metric::ndcg: return "ndcg";
    case Metric::mrr: return "mrr";
    case Metric::hit_rate: return "hit_rate";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "precision") return Metric::precision;
  if (s == "recall") return Metric::recall;
  if (s == "map") return Metric::map;
  if (s == "ndcg") return Metric::ndcg;
  if (s == "mrr") return Metric::mrr;
  if (s == "hit_rate" || s == "hr") return Metric::hit_rate;
  throw ConfigError(fmt::format("unknown metric '{}'", s));
}

void MetricRequest::validate() const {
  if (metrics.empty()) throw ConfigError("metric request: no metrics");
  if (cutoffs.empty()) throw ConfigError("metric request: no cutoffs");
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (cutoffs[i] == 0) throw ConfigError("metric request: cutoffs must be >= 1");
    if (i > 0 && cutoffs[i] <= cutoffs[i - 1]) throw ConfigError("metric request: cutoffs must be strictly increasing");
  }
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (metrics[i] == metrics[j]) throw ConfigError(fmt::format("metric request: '{}' listed twice", to_string(metrics[i])));
    }
  }
}

std::size_t MetricRequest::slot(Metric m, std::size_t cutoff) const {
  const auto mi = std::find(metrics.begin(), metrics.end(), m);
  const auto ci = std::find(cutoffs.begin(), cutoffs.end(), cutoff);
  if (mi == metrics.end() || ci == cutoffs.end()) {
    throw Error(fmt::format("{}@{} was not requested", to_string(m), cutoff));
  }
  return static_cast<std::size_t>(mi - metrics.begin()) * cutoffs.size() + static_cast<std::size_t>(ci - cutoffs.begin());
}

namespace {

double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

}  // namespace

std::vector<double> user_metrics(std::span<const Index> ranked, std::span<const Index> relevant,
                                 const MetricRequest& request) {
  if (relevant.empty()) throw Error("user_metrics: empty relevant set");
  const std::size_t n_cut = request.cutoffs.size();
  std::vector<double> out(request.size(), 0.0);
  const std::size_t depth = std::min(ranked.size(), request.cutoffs.back());

  std::size_t hits = 0;
  std::size_t first_hit = 0;
  double dcg = 0.0;
  double ap_sum = 0.0;
  double idcg = 0.0;
  std::size_t ideal_rank = 0;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < n_cut; ++c) {
    const std::size_t k = request.cutoffs[c];
    for (; rank < std::min(depth, k); ++rank) {
      if (std::binary_search(relevant.begin(), relevant.end(), ranked[rank])) {
        ++hits;
        if (first_hit == 0) first_hit = rank + 1;
        dcg += discount(rank + 1);
        ap_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
      }
    }
    const std::size_t ideal = std::min(k, relevant.size());
    for (; ideal_rank < ideal; ++ideal_rank) idcg += discount(ideal_rank + 1);
    for (std::size_t m = 0; m < request.metrics.size(); ++m) {
      double v = 0.0;
      switch (request.metrics[m]) {
        case Metric::precision: v = static_cast<double>(hits) / static_cast<double>(k); break;
        case Metric::recall: v = static_cast<double>(hits) / static_cast<double>(relevant.size()); break;
        case Metric::hit_rate: v = hits > 0 ? 1.0 : 0.0; break;
        case Metric::mrr: v = first_hit > 0 ? 1.0 / static_cast<double>(first_hit) : 0.0; break;
        case Metric::ndcg: v = dcg / idcg; break;
        case Metric::map: v = ap_sum / static_cast<double>(ideal); break;
      }
      out[m * n_cut + c] = v;
    }
  }
  return out;
}

double metric_at_k(std::span<const Index> ranked, std::span<const Index> relevant, std::size_t k, Metric metric) {
  if (k == 0) throw Error("metric_at_k: k must be >= 1");
  std::vector<Index> sorted(ranked.begin(), ranked.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error("metric_at_k: ranked list contains duplicate items");
  }
  if (!std::is_sorted(relevant.begin(), relevant.end())) throw Error("metric_at_k: relevant set must be sorted");
  const MetricRequest request{{metric}, {k}};
  return user_metrics(ranked, relevant, request)[0];
}

}  // namespace recbase
