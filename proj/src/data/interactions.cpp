#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "recbase/data.hpp"

namespace recbase {

InteractionMatrix::InteractionMatrix(std::size_t n_users, std::size_t n_items)
    : by_user_(n_users, n_items), by_item_(n_items, n_users) {}

InteractionMatrix InteractionMatrix::from_interactions(std::size_t n_users, std::size_t n_items,
                                                       std::vector<Interaction> entries,
                                                       DuplicatePolicy duplicates) {
  std::size_t with_ts = 0;
  for (const auto& e : entries) {
    if (e.user >= n_users || e.item >= n_items) {
      throw Error(fmt::format("interaction ({}, {}) outside {}x{} matrix", e.user, e.item, n_users, n_items));
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw Error(fmt::format("interaction ({}, {}) has non-positive weight {}", e.user, e.item, e.weight));
    }
    if (e.timestamp) ++with_ts;
  }
  if (with_ts != 0 && with_ts != entries.size()) {
    throw Error("timestamps must be present on all interactions or on none");
  }
  const bool timed = with_ts != 0;

  // Stable sort keeps file order among equal timestamps.
  std::stable_sort(entries.begin(), entries.end(), [&](const Interaction& a, const Interaction& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.item != b.item) return a.item < b.item;
    if (timed) return *a.timestamp < *b.timestamp;
    return false;
  });

  InteractionMatrix m;
  std::vector<std::size_t> indptr(n_users + 1, 0);
  std::vector<Index> indices;
  std::vector<double> values;
  indices.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (i > 0 && entries[i - 1].user == e.user && entries[i - 1].item == e.item) {
      if (duplicates == DuplicatePolicy::reject) {
        throw Error(fmt::format("duplicate interaction ({}, {})", e.user, e.item));
      }
      continue;  // earliest already stored
    }
    indices.push_back(e.item);
    values.push_back(e.weight);
    if (timed) m.timestamps_.push_back(*e.timestamp);
    ++indptr[e.user + 1];
  }
  std::partial_sum(indptr.begin(), indptr.end(), indptr.begin());
  m.by_user_ = CsrMatrix(n_users, n_items, std::move(indptr), std::move(indices), std::move(values));
  m.by_item_ = m.by_user_.transpose();
  return m;
}

std::span<const std::int64_t> InteractionMatrix::user_timestamps(Index user) const {
  if (timestamps_.empty()) return {};
  const std::size_t begin = by_user_.indptr()[user];
  return {timestamps_.data() + begin, by_user_.row_size(user)};
}

bool InteractionMatrix::contains(Index user, Index item) const {
  const auto row = user_row(user);
  return std::binary_search(row.indices.begin(), row.indices.end(), item);
}

std::vector<Interaction> InteractionMatrix::interactions() const {
  std::vector<Interaction> out;
  out.reserve(nnz());
  for (Index u = 0; u < n_users(); ++u) {
    const auto row = user_row(u);
    const auto ts = user_timestamps(u);
    for (std::size_t p = 0; p < row.size(); ++p) {
      Interaction e{u, row.indices[p], row.values[p], std::nullopt};
      if (!ts.empty()) e.timestamp = ts[p];
      out.push_back(e);
    }
  }
  return out;
}

Index IdMap::intern(const std::string& raw) {
  const auto [it, inserted] = lookup_.try_emplace(raw, static_cast<Index>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

std::optional<Index> IdMap::find(const std::string& raw) const {
  const auto it = lookup_.find(raw);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

IdMap IdMap::select(std::span<const Index> keep) const {
  IdMap out;
  for (Index old : keep) out.intern(raw_.at(old));
  return out;
}

InteractionMatrix merge(std::span<const InteractionMatrix* const> parts) {
  if (parts.empty()) return {};
  const std::size_t n_users = parts.front()->n_users();
  const std::size_t n_items = parts.front()->n_items();
  std::vector<Interaction> all;
  bool timed = true;
  for (const auto* p : parts) {
    if (p->n_users() != n_users || p->n_items() != n_items) throw Error("merge: shape mismatch");
    if (!p->empty() && !p->has_timestamps()) timed = false;
  }
  for (const auto* p : parts) {
    for (auto e : p->interactions()) {
      if (!timed) e.timestamp.reset();
      all.push_back(e);
    }
  }
  // Keep the first occurrence: stable ordering by (user, item) only.
  std::stable_sort(all.begin(), all.end(), [](const Interaction& a, const Interaction& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  all.erase(std::unique(all.begin(), all.end(),
                        [](const Interaction& a, const Interaction& b) { return a.user == b.user && a.item == b.item; }),
            all.end());
  return InteractionMatrix::from_interactions(n_users, n_items, std::move(all));
}

InteractionMatrix merge(const InteractionMatrix& a, const InteractionMatrix& b) {
  const InteractionMatrix* parts[] = {&a, &b};
  return merge(parts);
}

InteractionMatrix restrict_users(const InteractionMatrix& m, std::span<const Index> users) {
  std::vector<bool> keep(m.n_users(), false);
  for (Index u : users) keep.at(u) = true;
  std::vector<Interaction> out;
  for (const auto& e : m.interactions()) {
    if (keep[e.user]) out.push_back(e);
  }
  return InteractionMatrix::from_interactions(m.n_users(), m.n_items(), std::move(out));
}

}  // namespace recbase
