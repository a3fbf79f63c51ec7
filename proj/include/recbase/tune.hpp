#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "recbase/data.hpp"
#include "recbase/eval.hpp"
#include "recbase/models.hpp"
#include "recbase/rng.hpp"
#include "recbase/similarity.hpp"

namespace recbase {

// ---- search spaces -------------------------------------------------------------

struct IntegerUniform {
  std::int64_t lo;
  std::int64_t hi;  // inclusive
};
struct RealUniform {
  double lo;
  double hi;
};
struct RealLogUniform {
  double lo;
  double hi;
};
struct Categorical {
  std::vector<nlohmann::json> values;
};

struct ParamSpec {
  std::string name;
  std::variant<IntegerUniform, RealUniform, RealLogUniform, Categorical> kind;

  // Throws ConfigError: lo >= hi, log bounds <= 0, empty categorical.
  void validate() const;
  nlohmann::json sample(SeededRng& rng) const;
  // Position in [0, 1]: linear for uniform kinds, logarithmic for log-uniform,
  // index / (n - 1) for categoricals.
  double encode(const nlohmann::json& value) const;
  nlohmann::json decode(double unit) const;
};

struct SearchSpace {
  std::string algorithm;
  std::vector<ParamSpec> params;
  nlohmann::json fixed = nlohmann::json::object();  // passed to every trial unchanged

  void validate() const;
  // fixed merged with one value per param.
  nlohmann::json sample(SeededRng& rng) const;
};

// The default space of an algorithm. KNN spaces depend on the similarity
// measure; `similarity` is ignored elsewhere.
SearchSpace builtin_space(std::string_view algorithm, Measure similarity = Measure::cosine);

nlohmann::json to_json(const ParamSpec& spec);
ParamSpec param_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const nlohmann::json& j);

// ---- search ------------------------------------------------------------------------

enum class TrialStatus { ok, failed };

struct Trial {
  std::size_t index = 0;
  nlohmann::json params;
  std::optional<double> objective;
  std::optional<std::size_t> fit_epochs;
  double wall_time_s = 0.0;
  TrialStatus status = TrialStatus::ok;
  std::string error;
};

nlohmann::json to_json(const Trial& t);
Trial trial_from_json(const nlohmann::json& j);

// What an objective reports for one configuration; larger is better.
struct TrialOutcome {
  double objective = 0.0;
  std::optional<std::size_t> fit_epochs;
};
using Objective = std::function<TrialOutcome(const nlohmann::json& params)>;

enum class SearchStrategy {
  smbo,    // tree-ensemble surrogate with expected improvement after the random start
  random,  // every trial drawn from the prior
};

struct SearchOptions {
  std::size_t budget = 50;
  std::size_t n_random_init = 15;
  SearchStrategy strategy = SearchStrategy::smbo;
  std::size_t n_candidates = 1000;
  std::size_t n_trees = 50;
  // Append-only JSON lines; trials already present are reused, so an
  // interrupted search resumes where it stopped.
  std::optional<std::filesystem::path> log_path;
};

struct SearchResult {
  Trial best;
  std::vector<Trial> trials;
};

// Maximizes `objective`. Trials whose objective throws or is not finite are
// marked failed; throws Error if every trial fails.
SearchResult search(const SearchSpace& space, const Objective& objective, const SearchOptions& options,
                    const SeededRng& rng);

// ---- early stopping --------------------------------------------------------------------

struct EarlyStopConfig {
  std::size_t epochs_per_step = 5;
  std::size_t patience_steps = 5;
  std::size_t epochs_max = 500;

  void validate() const;
};

struct EarlyStopResult {
  FittedModel model;  // snapshot taken at best_epoch
  std::size_t best_epoch = 0;
  double best_value = 0.0;
  std::size_t epochs_trained = 0;
  std::vector<double> history;  // validation value after each step
};

// Trains in steps, validating after each; a step improves only when its
// value is strictly greater than the best so far. Stops after patience_steps
// non-improving steps in a row or at epochs_max. Throws Error when validation
// returns a non-finite value.
EarlyStopResult early_stop_train(Trainable& trainable, const std::function<double(const FittedModel&)>& validate,
                                 const EarlyStopConfig& cfg);

// ---- tuning --------------------------------------------------------------------------------

// Everything the tuner may look at. There is deliberately no test member.
struct TuningData {
  const InteractionMatrix* train = nullptr;
  const InteractionMatrix* validation = nullptr;
  Protocol protocol = Protocol::full_ranking;
  const NegativeSets* validation_negatives = nullptr;  // sampled protocol
  const InteractionMatrix* fold_in = nullptr;          // user hold-out protocol
  std::vector<Index> validation_users;                 // user hold-out protocol
  // Validation entries are also train entries (single-interaction training
  // protocols); seen items are then not masked during validation.
  bool validation_in_train = false;
  const ContentMatrix* item_content = nullptr;
  const ContentMatrix* user_content = nullptr;
};

// Per user with validation items: n distinct items outside the user's train
// and validation entries. Test entries are unknown here by construction.
NegativeSets sample_validation_negatives(const InteractionMatrix& train, const InteractionMatrix& validation,
                                         std::size_t n_per_user, const SeededRng& rng);

struct TuneOptions {
  SearchOptions search;
  Metric target_metric = Metric::ndcg;
  std::size_t target_cutoff = 10;
  EarlyStopConfig early_stop;
  std::uint64_t seed = 0;
  std::optional<std::size_t> memory_budget_bytes;
};

// Validation value of the target metric for a model fit on data.train.
double validation_objective(const FittedModel& model, const TuningData& data, const TuneOptions& options);

struct TuneResult {
  FittedModel model;       // refit on train and validation
  nlohmann::json params;   // as refit, epochs fixed for iterative models
  SearchResult search;
};

// Searches `space` on (train, validation), then refits the best
// configuration on their union; for the user hold-out protocol the union also
// contains the validation users' fold-in profiles.
TuneResult tune_and_refit(const SearchSpace& space, const TuningData& data, const TuneOptions& options);

// Training data of the final refit.
InteractionMatrix refit_matrix(const TuningData& data);

}  // namespace recbase
