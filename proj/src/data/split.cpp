#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "recbase/data.hpp"

namespace recbase {

namespace {

enum Part : unsigned char { kTrain = 0, kValidation = 1, kTest = 2, kFoldIn = 3 };

// assignment[u][p] is the part of the p-th entry of user_row(u).
using Assignment = std::vector<std::vector<unsigned char>>;

struct Parts {
  InteractionMatrix train, validation, test, fold_in;
};

Parts assemble(const InteractionMatrix& m, const Assignment& assignment) {
  std::vector<Interaction> buckets[4];
  for (Index u = 0; u < m.n_users(); ++u) {
    const auto row = m.user_row(u);
    const auto ts = m.user_timestamps(u);
    for (std::size_t p = 0; p < row.size(); ++p) {
      Interaction e{u, row.indices[p], row.values[p], std::nullopt};
      if (!ts.empty()) e.timestamp = ts[p];
      buckets[assignment[u][p]].push_back(e);
    }
  }
  auto build = [&](int part) {
    return InteractionMatrix::from_interactions(m.n_users(), m.n_items(), std::move(buckets[part]));
  };
  return {build(kTrain), build(kValidation), build(kTest), build(kFoldIn)};
}

Assignment empty_assignment(const InteractionMatrix& m) {
  Assignment a(m.n_users());
  for (Index u = 0; u < m.n_users(); ++u) a[u].assign(m.user_degree(u), kTrain);
  return a;
}

SplitBundle bundle_from(const InteractionMatrix& m, Parts parts, std::string splitter, nlohmann::json params,
                        std::uint64_t seed, bool keep_validation) {
  SplitBundle b;
  b.train = std::move(parts.train);
  b.test = std::move(parts.test);
  if (keep_validation) b.validation = std::move(parts.validation);
  b.provenance.splitter = std::move(splitter);
  b.provenance.params = std::move(params);
  b.provenance.seed = seed;
  b.provenance.dataset_digest = dataset_digest(m);
  return b;
}

// Walks two sorted index lists; true when they share an element.
bool intersects(std::span<const Index> a, std::span<const Index> b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

}  // namespace

SplitBundle split_random_holdout(const InteractionMatrix& m, double test_ratio, const SeededRng& rng) {
  if (!(test_ratio > 0.0 && test_ratio < 1.0)) throw ConfigError("split_random_holdout: test_ratio must be in (0, 1)");
  Assignment a = empty_assignment(m);
  parallel_for(m.n_users(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const std::size_t n = a[u].size();
      if (n < 2) continue;
      const auto wanted = static_cast<std::size_t>(std::ceil(test_ratio * static_cast<double>(n) - 1e-9));
      const std::size_t n_test = std::min(n - 1, std::max<std::size_t>(1, wanted));
      SeededRng local = rng.derive(u);
      for (std::size_t p : local.sample_without_replacement(n, n_test)) a[u][p] = kTest;
    }
  });
  return bundle_from(m, assemble(m, a), "random_holdout", {{"test_ratio", test_ratio}}, rng.seed(), false);
}

SplitBundle split_leave_last_out(const InteractionMatrix& m, bool with_validation) {
  if (!m.empty() && !m.has_timestamps()) throw Error("split_leave_last_out: interactions carry no timestamps");
  Assignment a = empty_assignment(m);
  for (Index u = 0; u < m.n_users(); ++u) {
    const std::size_t n = a[u].size();
    if (n == 0) continue;
    const auto ts = m.user_timestamps(u);
    const auto items = m.user_row(u).indices;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Most recent first; equal timestamps resolved toward the larger item index.
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (ts[x] != ts[y]) return ts[x] > ts[y];
      return items[x] > items[y];
    });
    a[u][order[0]] = kTest;
    if (with_validation && n >= 2) a[u][order[1]] = kValidation;
  }
  return bundle_from(m, assemble(m, a), "leave_last_out", {{"with_validation", with_validation}}, 0,
                     with_validation);
}

SplitBundle split_leave_one_out_random(const InteractionMatrix& m, const SeededRng& rng) {
  Assignment a = empty_assignment(m);
  parallel_for(m.n_users(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const std::size_t n = a[u].size();
      if (n < 2) continue;
      SeededRng local = rng.derive(u);
      a[u][local.below(n)] = kTest;
    }
  });
  return bundle_from(m, assemble(m, a), "leave_one_out_random", nlohmann::json::object(), rng.seed(), false);
}

SplitBundle split_user_holdout(const InteractionMatrix& m, std::size_t n_validation_users, std::size_t n_test_users,
                               double profile_ratio, const SeededRng& rng) {
  if (n_validation_users + n_test_users >= m.n_users()) {
    throw ConfigError(fmt::format("split_user_holdout: {} + {} held-out users leave no training users out of {}",
                                  n_validation_users, n_test_users, m.n_users()));
  }
  if (!(profile_ratio > 0.0 && profile_ratio < 1.0)) {
    throw ConfigError("split_user_holdout: profile_ratio must be in (0, 1)");
  }
  std::vector<Index> users(m.n_users());
  std::iota(users.begin(), users.end(), 0);
  SeededRng partition = rng.derive(0xFFFFFFFFFFFFFFFFULL);
  partition.shuffle(std::span<Index>(users));

  std::vector<Index> val_users(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_validation_users));
  std::vector<Index> test_users(users.begin() + static_cast<std::ptrdiff_t>(n_validation_users),
                                users.begin() + static_cast<std::ptrdiff_t>(n_validation_users + n_test_users));
  std::sort(val_users.begin(), val_users.end());
  std::sort(test_users.begin(), test_users.end());

  Assignment a = empty_assignment(m);
  std::size_t too_small = 0;
  auto hold_out = [&](Index u, unsigned char truth_part) {
    const std::size_t n = a[u].size();
    std::fill(a[u].begin(), a[u].end(), kFoldIn);
    if (n < 2) {
      ++too_small;
      return;
    }
    const auto truth = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor((1.0 - profile_ratio) * static_cast<double>(n) + 1e-9)));
    SeededRng local = rng.derive(u);
    for (std::size_t p : local.sample_without_replacement(n, std::min(truth, n - 1))) a[u][p] = truth_part;
  };
  for (Index u : val_users) hold_out(u, kValidation);
  for (Index u : test_users) hold_out(u, kTest);

  Parts parts = assemble(m, a);
  SplitBundle b = bundle_from(m, Parts{std::move(parts.train), std::move(parts.validation), std::move(parts.test), {}},
                              "user_holdout",
                              {{"n_validation_users", n_validation_users},
                               {"n_test_users", n_test_users},
                               {"profile_ratio", profile_ratio}},
                              rng.seed(), n_validation_users > 0);
  b.fold_in = std::move(parts.fold_in);
  b.validation_users = std::move(val_users);
  b.test_users = std::move(test_users);
  if (too_small > 0) {
    const std::string msg = fmt::format(
        "split_user_holdout: {} held-out users have fewer than 2 interactions; kept whole in profile, no ground truth",
        too_small);
    b.provenance.warnings.push_back(msg);
    warn(msg);
  }
  return b;
}

SplitBundle split_fixed_per_user(const InteractionMatrix& m, std::size_t per_user, const SeededRng& rng) {
  if (per_user < 1) throw ConfigError("split_fixed_per_user: per_user must be >= 1");
  Assignment a = empty_assignment(m);
  parallel_for(m.n_users(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const std::size_t n = a[u].size();
      if (n <= per_user) continue;
      std::fill(a[u].begin(), a[u].end(), kTest);
      SeededRng local = rng.derive(u);
      for (std::size_t p : local.sample_without_replacement(n, per_user)) a[u][p] = kTrain;
    }
  });
  return bundle_from(m, assemble(m, a), "fixed_per_user", {{"per_user", per_user}}, rng.seed(), false);
}

SplitBundle with_validation_from(SplitBundle bundle, SplitBundle train_split) {
  if (train_split.train.n_users() != bundle.train.n_users() || train_split.train.n_items() != bundle.train.n_items()) {
    throw Error("with_validation_from: validation split shape differs from the bundle");
  }
  bundle.validation = std::move(train_split.test);
  bundle.train = std::move(train_split.train);
  bundle.provenance.params["validation"] = {{"splitter", train_split.provenance.splitter},
                                            {"params", train_split.provenance.params},
                                            {"seed", train_split.provenance.seed}};
  return bundle;
}

SplitBundle sample_negatives(SplitBundle bundle, std::size_t n_per_user, const SeededRng& rng) {
  if (n_per_user < 1) throw ConfigError("sample_negatives: n_per_user must be >= 1");
  const std::size_t n_users = bundle.test.n_users();
  const std::size_t n_items = bundle.test.n_items();
  std::vector<std::vector<Index>> per_user(n_users);
  std::vector<bool> has_test(n_users, false);

  parallel_for(n_users, [&](std::size_t begin, std::size_t end) {
    std::vector<bool> owned(n_items);
    std::vector<Index> candidates;
    for (std::size_t u = begin; u < end; ++u) {
      const auto uid = static_cast<Index>(u);
      if (bundle.test.user_degree(uid) == 0) continue;
      has_test[u] = true;
      std::fill(owned.begin(), owned.end(), false);
      auto mark = [&](const InteractionMatrix& m) {
        for (Index i : m.user_row(uid).indices) owned[i] = true;
      };
      mark(bundle.train);
      mark(bundle.test);
      if (bundle.validation) mark(*bundle.validation);
      if (bundle.fold_in) mark(*bundle.fold_in);
      candidates.clear();
      for (Index i = 0; i < n_items; ++i) {
        if (!owned[i]) candidates.push_back(i);
      }
      SeededRng local = rng.derive(u);
      auto& out = per_user[u];
      for (std::size_t p : local.sample_without_replacement(candidates.size(), n_per_user)) {
        out.push_back(candidates[p]);
      }
    }
  });

  NegativeSets negatives;
  std::size_t short_users = 0;
  std::size_t min_count = n_per_user;
  for (Index u = 0; u < n_users; ++u) {
    if (!has_test[u]) continue;
    if (per_user[u].size() < n_per_user) {
      ++short_users;
      min_count = std::min(min_count, per_user[u].size());
    }
    negatives.emplace(u, std::move(per_user[u]));
  }
  bundle.negatives = std::move(negatives);
  bundle.provenance.params["negatives"] = {{"per_user", n_per_user}, {"seed", rng.seed()},
                                           {"shortfall_users", short_users}};
  if (short_users > 0) {
    const std::string msg = fmt::format(
        "sample_negatives: {} users have fewer than {} candidate negatives (smallest set: {})", short_users,
        n_per_user, min_count);
    bundle.provenance.warnings.push_back(msg);
    warn(msg);
  }
  return bundle;
}

void SplitBundle::validate(bool allow_validation_in_train) const {
  const std::size_t nu = train.n_users(), ni = train.n_items();
  auto same_shape = [&](const InteractionMatrix& m, const char* name) {
    if (m.n_users() != nu || m.n_items() != ni) {
      throw Error(fmt::format("SplitBundle: {} is {}x{}, train is {}x{}", name, m.n_users(), m.n_items(), nu, ni));
    }
  };
  same_shape(test, "test");
  if (validation) same_shape(*validation, "validation");
  if (fold_in) same_shape(*fold_in, "fold_in");

  auto disjoint = [&](const InteractionMatrix& a, const InteractionMatrix& b, const char* an, const char* bn) {
    for (Index u = 0; u < nu; ++u) {
      if (intersects(a.user_row(u).indices, b.user_row(u).indices)) {
        throw Error(fmt::format("SplitBundle: {} and {} share an interaction of user {}", an, bn, u));
      }
    }
  };
  disjoint(train, test, "train", "test");
  if (validation) {
    if (!allow_validation_in_train) disjoint(train, *validation, "train", "validation");
    disjoint(*validation, test, "validation", "test");
  }
  if (fold_in) {
    disjoint(*fold_in, train, "fold_in", "train");
    disjoint(*fold_in, test, "fold_in", "test");
    if (validation) disjoint(*fold_in, *validation, "fold_in", "validation");
  }

  if (negatives) {
    for (const auto& [u, items] : *negatives) {
      if (u >= nu) throw Error(fmt::format("SplitBundle: negatives for unknown user {}", u));
      std::unordered_set<Index> seen;
      for (Index i : items) {
        if (i >= ni) throw Error(fmt::format("SplitBundle: negative item {} out of range", i));
        if (!seen.insert(i).second) throw Error(fmt::format("SplitBundle: duplicate negative {} for user {}", i, u));
        if (train.contains(u, i) || test.contains(u, i) || (validation && validation->contains(u, i))) {
          throw Error(fmt::format("SplitBundle: negative {} of user {} is a known interaction", i, u));
        }
      }
    }
  }
}

}  // namespace recbase
