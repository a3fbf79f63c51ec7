#include <fmt/format.h>

#include "recbase/tune.hpp"

namespace recbase {

NegativeSets sample_validation_negatives(const InteractionMatrix& train, const InteractionMatrix& validation,
                                         std::size_t n_per_user, const SeededRng& rng) {
  if (n_per_user == 0) throw ConfigError("validation negatives: count must be >= 1");
  if (train.n_users() != validation.n_users() || train.n_items() != validation.n_items()) {
    throw Error("validation negatives: train and validation shapes differ");
  }
  NegativeSets out;
  std::vector<unsigned char> taken(train.n_items(), 0);
  std::vector<Index> pool;
  for (Index u = 0; u < validation.n_users(); ++u) {
    const auto truth = validation.user_row(u);
    if (truth.empty()) continue;
    const auto seen = train.user_row(u);
    for (Index i : seen.indices) taken[i] = 1;
    for (Index i : truth.indices) taken[i] = 1;
    pool.clear();
    for (Index i = 0; i < train.n_items(); ++i) {
      if (!taken[i]) pool.push_back(i);
    }
    for (Index i : seen.indices) taken[i] = 0;
    for (Index i : truth.indices) taken[i] = 0;
    auto user_rng = rng.derive(u);
    auto& list = out[u];
    for (std::size_t pos : user_rng.sample_without_replacement(pool.size(), std::min(n_per_user, pool.size()))) {
      list.push_back(pool[pos]);
    }
  }
  return out;
}

double validation_objective(const FittedModel& model, const TuningData& data, const TuneOptions& options) {
  if (!data.validation) throw Error("tuning: no validation data");
  EvaluationTask task;
  task.protocol = data.protocol;
  task.ground_truth = data.validation;
  switch (data.protocol) {
    case Protocol::sampled:
      if (!data.validation_negatives) throw Error("tuning: sampled validation needs negatives");
      task.negatives = data.validation_negatives;
      break;
    case Protocol::full_ranking:
      task.exclude_seen = !data.validation_in_train;
      break;
    case Protocol::user_holdout:
      if (!data.fold_in) throw Error("tuning: user hold-out validation needs fold-in profiles");
      task.fold_in = data.fold_in;
      task.users = data.validation_users;
      if (task.users.empty()) throw Error("tuning: no validation users");
      break;
  }
  const MetricRequest request{{options.target_metric}, {options.target_cutoff}};
  const auto report = evaluate(model, task, request);
  if (report.n_users_evaluated == 0) throw Error("tuning: no user could be evaluated on validation");
  return report.means[0];
}

InteractionMatrix refit_matrix(const TuningData& data) {
  if (data.validation_in_train) return *data.train;
  if (data.protocol == Protocol::user_holdout && data.fold_in) {
    const auto profiles = restrict_users(*data.fold_in, data.validation_users);
    const InteractionMatrix* parts[] = {data.train, data.validation, &profiles};
    return merge(parts);
  }
  return merge(*data.train, *data.validation);
}

namespace {

FitContext context(const TuningData& data, const InteractionMatrix* train, const TuneOptions& options) {
  FitContext ctx;
  ctx.train = train;
  ctx.item_content = data.item_content;
  ctx.user_content = data.user_content;
  ctx.seed = options.seed;
  ctx.memory_budget_bytes = options.memory_budget_bytes;
  return ctx;
}

}  // namespace

TuneResult tune_and_refit(const SearchSpace& space, const TuningData& data, const TuneOptions& options) {
  if (!data.train || !data.validation) throw Error("tuning: train and validation are required");
  const auto& info = algorithm_info(space.algorithm);
  const FitContext fit_ctx = context(data, data.train, options);

  const Objective objective = [&](const nlohmann::json& params) -> TrialOutcome {
    if (info.iterative) {
      auto trainable = make_trainable(space.algorithm, params, fit_ctx);
      const auto r = early_stop_train(
          *trainable, [&](const FittedModel& m) { return validation_objective(m, data, options); }, options.early_stop);
      return {r.best_value, r.best_epoch};
    }
    const auto model = fit_algorithm(space.algorithm, params, fit_ctx);
    return {validation_objective(model, data, options), std::nullopt};
  };
  auto result = search(space, objective, options.search, SeededRng(options.seed));

  nlohmann::json params = result.best.params;
  if (info.iterative && result.best.fit_epochs) params["epochs"] = *result.best.fit_epochs;
  const InteractionMatrix merged = refit_matrix(data);
  auto model = fit_algorithm(space.algorithm, params, context(data, &merged, options));
  return TuneResult{std::move(model), std::move(params), std::move(result)};
}

}  // namespace recbase
