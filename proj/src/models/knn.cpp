#include <fmt/format.h>

#include "recbase/models.hpp"

namespace recbase {

namespace {

std::string kind_name(Axis axis, std::string_view family) {
  return fmt::format("{}knn_{}", axis == Axis::items ? "item" : "user", family);
}

FittedModel from_similarity(std::string kind, nlohmann::json hp, const InteractionMatrix& train, Axis axis,
                            SimilarityMatrix s, std::shared_ptr<const SimilarityIndex> fold_in) {
  auto shared = std::make_shared<const InteractionMatrix>(train);
  if (axis == Axis::items) {
    // Row i of s holds the neighbourhood of target item i.
    return FittedModel(std::move(kind), std::move(hp), std::move(shared), ItemWeightsArtifact{s.matrix().transpose()});
  }
  return FittedModel(std::move(kind), std::move(hp), std::move(shared),
                     UserSimilarityArtifact{std::move(s), std::move(fold_in)});
}

void check_content(const InteractionMatrix& train, const ContentMatrix& content, Axis axis) {
  const std::size_t expected = axis == Axis::items ? train.n_items() : train.n_users();
  if (content.n_entities() != expected) {
    throw ConfigError(fmt::format("content matrix has {} rows, training data has {} {}", content.n_entities(),
                                  expected, to_string(axis)));
  }
}

}  // namespace

FittedModel fit_knn(const InteractionMatrix& train, Axis axis, const SimilarityConfig& cfg) {
  cfg.validate();
  auto s = compute_similarity(train, axis, cfg);
  std::shared_ptr<const SimilarityIndex> fold_in;
  if (axis == Axis::users) fold_in = std::make_shared<const SimilarityIndex>(train.by_user(), cfg);
  return from_similarity(kind_name(axis, "cf"), to_json(cfg), train, axis, std::move(s), std::move(fold_in));
}

FittedModel fit_knn_cbf(const InteractionMatrix& train, const ContentMatrix& content, Axis axis,
                        const SimilarityConfig& cfg) {
  cfg.validate();
  check_content(train, content, axis);
  auto s = compute_row_similarity(content.features, cfg);
  return from_similarity(kind_name(axis, "cbf"), to_json(cfg), train, axis, std::move(s), nullptr);
}

FittedModel fit_knn_cfcbf(const InteractionMatrix& train, const ContentMatrix& content, Axis axis,
                          const SimilarityConfig& cfg, double content_weight) {
  cfg.validate();
  check_content(train, content, axis);
  const auto hybrid = concat_hybrid(train, content, content_weight, axis);
  auto s = compute_similarity(hybrid, axis, cfg);
  auto hp = to_json(cfg);
  hp["w"] = content_weight;
  return from_similarity(kind_name(axis, "cfcbf"), std::move(hp), train, axis, std::move(s), nullptr);
}

}  // namespace recbase
