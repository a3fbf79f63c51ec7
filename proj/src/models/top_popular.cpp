#include "recbase/models.hpp"

namespace recbase {

FittedModel fit_top_popular(const InteractionMatrix& train) {
  PopularityArtifact a;
  a.popularity.resize(train.n_items());
  for (Index i = 0; i < train.n_items(); ++i) a.popularity[i] = static_cast<double>(train.item_degree(i));
  return FittedModel("toppop", nlohmann::json::object(), std::make_shared<const InteractionMatrix>(train),
                     std::move(a));
}

}  // namespace recbase
