#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "recbase/audit.hpp"

namespace recbase {

double gini(std::span<const double> counts) {
  std::vector<double> x(counts.begin(), counts.end());
  std::sort(x.begin(), x.end());
  if (x.empty() || !(x.back() > 0.0)) throw Error("gini: needs at least one positive count");
  if (x.front() < 0.0) throw Error("gini: counts must be nonnegative");
  CompensatedSum weighted;
  CompensatedSum total;
  for (std::size_t i = 0; i < x.size(); ++i) {
    weighted.add(static_cast<double>(i + 1) * x[i]);
    total.add(x[i]);
  }
  const auto n = static_cast<double>(x.size());
  return 2.0 * weighted.value() / (n * total.value()) - (n + 1.0) / n;
}

double shannon_entropy(std::span<const double> counts) {
  CompensatedSum total;
  for (double c : counts) {
    if (c < 0.0) throw Error("entropy: counts must be nonnegative");
    total.add(c);
  }
  if (!(total.value() > 0.0)) return 0.0;
  CompensatedSum h;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total.value();
      h.add(-p * std::log2(p));
    }
  }
  return h.value();
}

namespace {

std::vector<double> item_counts(const InteractionMatrix& m) {
  std::vector<double> c(m.n_items());
  for (Index i = 0; i < m.n_items(); ++i) c[i] = static_cast<double>(m.item_degree(i));
  return c;
}

std::vector<double> normalized(const std::vector<double>& counts) {
  const double top = counts.empty() ? 0.0 : *std::max_element(counts.begin(), counts.end());
  std::vector<double> out(counts.size(), 0.0);
  if (top > 0.0) {
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / top;
  }
  return out;
}

void check_shapes(const InteractionMatrix& train, const InteractionMatrix& test) {
  if (train.n_items() != test.n_items()) {
    throw Error(fmt::format("audit: train has {} items, test has {}", train.n_items(), test.n_items()));
  }
}

}  // namespace

PopularityProfile popularity_profile(const InteractionMatrix& train, const InteractionMatrix& test) {
  check_shapes(train, test);
  const auto tr = item_counts(train);
  const auto te = item_counts(test);
  PopularityProfile p;
  for (Index i = 0; i < train.n_items(); ++i) {
    if (tr[i] > 0.0 || te[i] > 0.0) p.items.push_back(i);
  }
  std::stable_sort(p.items.begin(), p.items.end(), [&](Index a, Index b) { return tr[a] > tr[b]; });
  for (Index i : p.items) {
    p.train_count.push_back(tr[i]);
    p.test_count.push_back(te[i]);
  }
  p.train_normalized = normalized(p.train_count);
  p.test_normalized = normalized(p.test_count);
  return p;
}

PopularityProfile popularity_profile(const SplitBundle& bundle) { return popularity_profile(bundle.train, bundle.test); }

SplitAuditReport audit_split(const InteractionMatrix& train, const InteractionMatrix& test) {
  SplitAuditReport r;
  r.profile = popularity_profile(train, test);
  const auto& p = r.profile;
  r.n_items_supported = p.items.size();
  if (p.items.empty()) throw Error("audit: train and test are both empty");
  std::vector<double> full(p.items.size());
  for (std::size_t k = 0; k < full.size(); ++k) full[k] = p.train_count[k] + p.test_count[k];
  auto safe_gini = [](const std::vector<double>& c) {
    return std::any_of(c.begin(), c.end(), [](double v) { return v > 0.0; }) ? gini(c) : 0.0;
  };
  r.gini_train = safe_gini(p.train_count);
  r.gini_test = safe_gini(p.test_count);
  r.gini_full = gini(full);
  r.entropy_train = shannon_entropy(p.train_count);
  r.entropy_test = shannon_entropy(p.test_count);
  r.entropy_full = shannon_entropy(full);
  CompensatedSum gap;
  for (std::size_t k = 0; k < p.items.size(); ++k) {
    const double d = std::abs(p.train_normalized[k] - p.test_normalized[k]);
    r.max_popularity_gap = std::max(r.max_popularity_gap, d);
    gap.add(d);
  }
  r.mean_popularity_gap = gap.value() / static_cast<double>(p.items.size());
  return r;
}

SplitAuditReport audit_split(const SplitBundle& bundle) { return audit_split(bundle.train, bundle.test); }

double matrix_gini(const InteractionMatrix& m) {
  std::vector<double> c;
  for (Index i = 0; i < m.n_items(); ++i) {
    if (m.item_degree(i) > 0) c.push_back(static_cast<double>(m.item_degree(i)));
  }
  return gini(c);
}

double matrix_entropy(const InteractionMatrix& m) { return shannon_entropy(item_counts(m)); }

NegativeAuditReport audit_negatives(const SplitBundle& bundle, std::span<const std::pair<Index, Index>> pairs,
                                    std::optional<std::size_t> target) {
  NegativeAuditReport r;
  r.target = target;
  r.n_pairs = pairs.size();
  const std::size_t nu = bundle.train.n_users();
  const std::size_t ni = bundle.train.n_items();
  std::set<std::pair<Index, Index>> distinct;
  for (const auto& pr : pairs) {
    if (pr.first >= nu || pr.second >= ni) {
      ++r.out_of_range;
      continue;
    }
    if (!distinct.insert(pr).second) ++r.duplicate_pairs;
  }
  std::vector<std::size_t> per_user(nu, 0);
  for (const auto& [u, i] : distinct) {
    ++per_user[u];
    if (bundle.train.contains(u, i)) ++r.overlap_train;
    if (bundle.validation && bundle.validation->contains(u, i)) ++r.overlap_validation;
    if (bundle.test.contains(u, i)) ++r.overlap_test;
  }
  for (Index u = 0; u < nu; ++u) {
    const bool has_test = u < bundle.test.n_users() && bundle.test.user_degree(u) > 0;
    if (has_test) {
      ++r.users_with_test;
      ++r.distinct_count_histogram[per_user[u]];
      if (per_user[u] == 0) ++r.users_zero_negatives;
      if (target && per_user[u] < *target) ++r.users_below_target;
    } else if (per_user[u] > 0) {
      ++r.users_zero_positives;
    }
  }
  return r;
}

NegativeAuditReport audit_negatives(const SplitBundle& bundle, std::optional<std::size_t> target) {
  std::vector<std::pair<Index, Index>> pairs;
  if (bundle.negatives) {
    for (const auto& [u, list] : *bundle.negatives) {
      for (Index i : list) pairs.emplace_back(u, i);
    }
  }
  return audit_negatives(bundle, pairs, target);
}

nlohmann::json to_json(const SplitAuditReport& r) {
  return {{"gini_train", r.gini_train},
          {"gini_test", r.gini_test},
          {"gini_full", r.gini_full},
          {"entropy_train", r.entropy_train},
          {"entropy_test", r.entropy_test},
          {"entropy_full", r.entropy_full},
          {"n_items_supported", r.n_items_supported},
          {"max_popularity_gap", r.max_popularity_gap},
          {"mean_popularity_gap", r.mean_popularity_gap}};
}

nlohmann::json to_json(const NegativeAuditReport& r) {
  nlohmann::json histogram = nlohmann::json::object();
  for (const auto& [count, users] : r.distinct_count_histogram) histogram[std::to_string(count)] = users;
  return {{"target", r.target ? nlohmann::json(*r.target) : nlohmann::json()},
          {"n_pairs", r.n_pairs},
          {"duplicate_pairs", r.duplicate_pairs},
          {"overlap_train", r.overlap_train},
          {"overlap_validation", r.overlap_validation},
          {"overlap_test", r.overlap_test},
          {"out_of_range", r.out_of_range},
          {"users_with_test", r.users_with_test},
          {"users_below_target", r.users_below_target},
          {"users_zero_negatives", r.users_zero_negatives},
          {"users_zero_positives", r.users_zero_positives},
          {"distinct_count_histogram", std::move(histogram)},
          {"defects", r.defects()}};
}

void write_popularity_csv(const std::filesystem::path& path, const PopularityProfile& profile) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  out << "rank,norm_pop_train,norm_pop_test\n";
  for (std::size_t k = 0; k < profile.items.size(); ++k) {
    out << fmt::format("{},{:.6f},{:.6f}\n", k, profile.train_normalized[k], profile.test_normalized[k]);
  }
}

}  // namespace recbase
