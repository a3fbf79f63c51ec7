#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "detail.hpp"

namespace recbase {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void add_row_times(SparseRowView row, double scale, std::span<double> out) {
  for (std::size_t p = 0; p < row.size(); ++p) out[row.indices[p]] += scale * row.values[p];
}

void check_size(std::span<double> out, std::size_t n) {
  if (out.size() != n) throw Error(fmt::format("score buffer has {} entries, expected {}", out.size(), n));
}

void score_factors(const FactorArtifact& f, SparseRowView profile, std::span<double> out) {
  if (f.item_similarity) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t p = 0; p < profile.size(); ++p) {
      add_row_times(f.item_similarity->row(profile.indices[p]), profile.values[p], out);
    }
    return;
  }
  Eigen::VectorXd latent = Eigen::VectorXd::Zero(f.item_factors.cols());
  for (std::size_t p = 0; p < profile.size(); ++p) {
    latent += profile.values[p] * f.item_factors.row(profile.indices[p]).transpose();
  }
  if (f.fold_in.mode == ColdUserMode::embedding_average && !profile.empty()) {
    latent /= static_cast<double>(profile.size());
  }
  Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = f.item_factors * latent;
}

}  // namespace

std::string_view to_string(ColdUserMode m) {
  return m == ColdUserMode::item_similarity ? "item_similarity" : "embedding_average";
}

ColdUserMode parse_cold_user_mode(std::string_view s) {
  if (s == "item_similarity") return ColdUserMode::item_similarity;
  if (s == "embedding_average") return ColdUserMode::embedding_average;
  throw ConfigError(fmt::format("unknown cold user mode '{}'", s));
}

FittedModel::FittedModel(std::string kind, nlohmann::json hyperparameters,
                         std::shared_ptr<const InteractionMatrix> train, ModelArtifact artifact,
                         std::optional<std::size_t> fit_epochs)
    : kind_(std::move(kind)),
      hyperparameters_(std::move(hyperparameters)),
      train_(std::move(train)),
      artifact_(std::move(artifact)),
      fit_epochs_(fit_epochs) {
  if (!train_) throw Error("FittedModel: missing training matrix");
}

bool FittedModel::supports_fold_in() const noexcept {
  if (const auto* a = std::get_if<UserSimilarityArtifact>(&artifact_)) return a->fold_in != nullptr;
  return true;
}

void FittedModel::score_user(Index user, std::span<double> out) const {
  check_size(out, n_items());
  if (user >= n_users()) throw Error(fmt::format("user {} out of range ({} users)", user, n_users()));
  std::visit(Overloaded{
                 [&](const UserSimilarityArtifact& a) {
                   std::fill(out.begin(), out.end(), 0.0);
                   const auto neighbours = a.similarity.row(user);
                   for (std::size_t p = 0; p < neighbours.size(); ++p) {
                     add_row_times(train_->user_row(neighbours.indices[p]), neighbours.values[p], out);
                   }
                 },
                 [&](const FactorArtifact& a) {
                   Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) =
                       a.item_factors * a.user_factors.row(user).transpose();
                 },
                 [&](const auto&) { score_profile(train_->user_row(user), out); },
             },
             artifact_);
}

void FittedModel::score_profile(SparseRowView profile, std::span<double> out) const {
  check_size(out, n_items());
  for (Index i : profile.indices) {
    if (i >= n_items()) throw Error(fmt::format("profile item {} out of range ({} items)", i, n_items()));
  }
  std::visit(Overloaded{
                 [&](const PopularityArtifact& a) { std::copy(a.popularity.begin(), a.popularity.end(), out.begin()); },
                 [&](const ItemWeightsArtifact& a) {
                   std::fill(out.begin(), out.end(), 0.0);
                   for (std::size_t p = 0; p < profile.size(); ++p) {
                     add_row_times(a.weights.row(profile.indices[p]), profile.values[p], out);
                   }
                 },
                 [&](const UserSimilarityArtifact& a) {
                   if (!a.fold_in) throw Error(fmt::format("{}: scoring profiles outside the training set is not supported", kind_));
                   std::fill(out.begin(), out.end(), 0.0);
                   for (const auto& [v, s] : a.fold_in->query(profile)) add_row_times(train_->user_row(v), s, out);
                 },
                 [&](const FactorArtifact& a) { score_factors(a, profile, out); },
                 [&](const DenseWeightsArtifact& a) {
                   auto target = Eigen::Map<Eigen::RowVectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
                   target.setZero();
                   for (std::size_t p = 0; p < profile.size(); ++p) {
                     target += profile.values[p] * a.weights.row(profile.indices[p]);
                   }
                 },
             },
             artifact_);
}

namespace {

void mask(ScoreVector& sv, SparseRowView row) {
  for (Index i : row.indices) sv.excluded.push_back(i);
}

void finish_mask(ScoreVector& sv) {
  std::sort(sv.excluded.begin(), sv.excluded.end());
  sv.excluded.erase(std::unique(sv.excluded.begin(), sv.excluded.end()), sv.excluded.end());
  for (Index i : sv.excluded) sv.scores[i] = -std::numeric_limits<double>::infinity();
}

}  // namespace

ScoreVector score_all(const FittedModel& model, Index user, bool exclude_seen, const InteractionMatrix* also_exclude) {
  ScoreVector sv;
  sv.user = user;
  sv.scores.assign(model.n_items(), 0.0);
  model.score_user(user, sv.scores);
  if (exclude_seen) {
    mask(sv, model.train().user_row(user));
    if (also_exclude && user < also_exclude->n_users()) mask(sv, also_exclude->user_row(user));
  }
  finish_mask(sv);
  return sv;
}

ScoreVector score_fold_in(const FittedModel& model, Index user, SparseRowView profile, bool exclude_profile) {
  ScoreVector sv;
  sv.user = user;
  sv.scores.assign(model.n_items(), 0.0);
  model.score_profile(profile, sv.scores);
  if (exclude_profile) mask(sv, profile);
  finish_mask(sv);
  return sv;
}

std::vector<Index> top_n(std::span<const double> scores, std::size_t n) {
  std::vector<Index> order;
  order.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] != -std::numeric_limits<double>::infinity()) order.push_back(static_cast<Index>(i));
  }
  auto before = [&](Index a, Index b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  const std::size_t k = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  order.resize(k);
  return order;
}

std::vector<Index> recommend(const FittedModel& model, Index user, std::size_t n, bool exclude_seen,
                             const InteractionMatrix* also_exclude) {
  return top_n(score_all(model, user, exclude_seen, also_exclude).scores, n);
}

namespace detail {

void check_memory(std::string_view what, std::size_t bytes, std::optional<std::size_t> budget) {
  if (budget && bytes > *budget) {
    throw ResourceError(fmt::format("{} needs {:.2f} GB of dense workspace, over the {:.2f} GB budget", what,
                                    static_cast<double>(bytes) / 1e9, static_cast<double>(*budget) / 1e9));
  }
}

}  // namespace detail

}  // namespace recbase
