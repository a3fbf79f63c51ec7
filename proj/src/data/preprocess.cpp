#include <algorithm>
#include <cstring>

#include <fmt/format.h>

#include "recbase/data.hpp"

namespace recbase {

InteractionMatrix binarize(const InteractionMatrix& m, double threshold) {
  if (!std::isfinite(threshold)) throw ConfigError("binarize: threshold must be finite");
  std::vector<Interaction> kept;
  for (auto e : m.interactions()) {
    if (e.weight > threshold) {
      e.weight = 1.0;
      kept.push_back(e);
    }
  }
  if (kept.empty() && !m.empty()) {
    warn(fmt::format("binarize: no weight above threshold {}; result is empty", threshold));
  }
  return InteractionMatrix::from_interactions(m.n_users(), m.n_items(), std::move(kept));
}

namespace {

struct Alive {
  std::vector<bool> users;
  std::vector<bool> items;
};

// Degrees restricted to the alive sub-matrix.
std::vector<std::size_t> user_degrees(const InteractionMatrix& m, const Alive& a) {
  std::vector<std::size_t> d(m.n_users(), 0);
  for (Index u = 0; u < m.n_users(); ++u) {
    if (!a.users[u]) continue;
    for (Index i : m.user_row(u).indices) d[u] += a.items[i] ? 1 : 0;
  }
  return d;
}

std::vector<std::size_t> item_degrees(const InteractionMatrix& m, const Alive& a) {
  std::vector<std::size_t> d(m.n_items(), 0);
  for (Index i = 0; i < m.n_items(); ++i) {
    if (!a.items[i]) continue;
    for (Index u : m.item_column(i).indices) d[i] += a.users[u] ? 1 : 0;
  }
  return d;
}

// Returns true if anything was dropped.
bool drop_users(const InteractionMatrix& m, Alive& a, std::size_t min_deg) {
  const auto d = user_degrees(m, a);
  bool changed = false;
  for (Index u = 0; u < m.n_users(); ++u) {
    if (a.users[u] && d[u] < min_deg) {
      a.users[u] = false;
      changed = true;
    }
  }
  return changed;
}

bool drop_items(const InteractionMatrix& m, Alive& a, std::size_t min_deg) {
  const auto d = item_degrees(m, a);
  bool changed = false;
  for (Index i = 0; i < m.n_items(); ++i) {
    if (a.items[i] && d[i] < min_deg) {
      a.items[i] = false;
      changed = true;
    }
  }
  return changed;
}

bool any_entry(const InteractionMatrix& m, const Alive& a) {
  for (Index u = 0; u < m.n_users(); ++u) {
    if (!a.users[u]) continue;
    for (Index i : m.user_row(u).indices) {
      if (a.items[i]) return true;
    }
  }
  return false;
}

}  // namespace

FilterResult k_core_filter(const InteractionMatrix& m, std::size_t min_user_interactions,
                           std::size_t min_item_interactions, bool iterative) {
  Alive alive{std::vector<bool>(m.n_users(), true), std::vector<bool>(m.n_items(), true)};
  auto check = [&](const char* which, std::size_t threshold) {
    if (!any_entry(m, alive)) {
      throw Error(fmt::format("k_core_filter: {} threshold {} removed every interaction", which, threshold));
    }
  };
  bool changed = true;
  while (changed) {
    changed = drop_users(m, alive, min_user_interactions);
    check("min_user_interactions", min_user_interactions);
    changed = drop_items(m, alive, min_item_interactions) || changed;
    check("min_item_interactions", min_item_interactions);
    if (!iterative) break;
  }

  FilterResult r;
  std::vector<Index> user_new(m.n_users(), 0), item_new(m.n_items(), 0);
  for (Index u = 0; u < m.n_users(); ++u) {
    if (alive.users[u]) {
      user_new[u] = static_cast<Index>(r.kept_users.size());
      r.kept_users.push_back(u);
    }
  }
  for (Index i = 0; i < m.n_items(); ++i) {
    if (alive.items[i]) {
      item_new[i] = static_cast<Index>(r.kept_items.size());
      r.kept_items.push_back(i);
    }
  }
  std::vector<Interaction> kept;
  for (auto e : m.interactions()) {
    if (alive.users[e.user] && alive.items[e.item]) {
      e.user = user_new[e.user];
      e.item = item_new[e.item];
      kept.push_back(e);
    }
  }
  r.matrix = InteractionMatrix::from_interactions(r.kept_users.size(), r.kept_items.size(), std::move(kept));
  return r;
}

std::string dataset_digest(const InteractionMatrix& m) {
  Sha256 hash;
  hash.update(fmt::format("{}x{}:{}\n", m.n_users(), m.n_items(), m.nnz()));
  for (const auto& e : m.interactions()) {
    hash.update(e.timestamp ? fmt::format("{}\t{}\t{}\t{}\n", e.user, e.item, e.weight, *e.timestamp)
                            : fmt::format("{}\t{}\t{}\n", e.user, e.item, e.weight));
  }
  return hash.hex_digest();
}

}  // namespace recbase
