#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "recbase/data.hpp"
#include "recbase/similarity.hpp"
#include "recbase/sparse.hpp"

namespace recbase {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// How a factor model scores a profile that has no trained user vector.
enum class ColdUserMode {
  item_similarity,    // profile * (V V^T), optionally with V V^T row-pruned to top_k
  embedding_average,  // mean of the profile's item vectors, times V^T
};
std::string_view to_string(ColdUserMode m);
ColdUserMode parse_cold_user_mode(std::string_view s);

struct FoldInConfig {
  ColdUserMode mode = ColdUserMode::item_similarity;
  std::optional<std::size_t> top_k;  // item_similarity only; unset keeps V V^T dense
};

// ---- artifacts ---------------------------------------------------------------

struct PopularityArtifact {
  std::vector<double> popularity;
};

// score = profile * weights; row i lists the contributions of source item i
// to each target item. Diagonal is zero.
struct ItemWeightsArtifact {
  CsrMatrix weights;
};

// score(u) = similarity.row(u) * train. fold_in, when present, scores
// profiles of users that are not part of the similarity matrix.
struct UserSimilarityArtifact {
  SimilarityMatrix similarity;
  std::shared_ptr<const SimilarityIndex> fold_in;
};

// score(u) = user_factors.row(u) * item_factors^T.
struct FactorArtifact {
  Eigen::MatrixXd user_factors;  // n_users x f
  Eigen::MatrixXd item_factors;  // n_items x f
  FoldInConfig fold_in;
  std::optional<CsrMatrix> item_similarity;  // pruned V V^T when fold_in.top_k is set
};

// score = profile * weights, dense item x item with zero diagonal.
struct DenseWeightsArtifact {
  RowMatrix weights;
};

using ModelArtifact =
    std::variant<PopularityArtifact, ItemWeightsArtifact, UserSimilarityArtifact, FactorArtifact, DenseWeightsArtifact>;

// A trained recommender. Immutable; scoring is reentrant.
class FittedModel {
 public:
  FittedModel(std::string kind, nlohmann::json hyperparameters, std::shared_ptr<const InteractionMatrix> train,
              ModelArtifact artifact, std::optional<std::size_t> fit_epochs = std::nullopt);

  const std::string& kind() const noexcept { return kind_; }
  const nlohmann::json& hyperparameters() const noexcept { return hyperparameters_; }
  const ModelArtifact& artifact() const noexcept { return artifact_; }
  std::optional<std::size_t> fit_epochs() const noexcept { return fit_epochs_; }
  const InteractionMatrix& train() const noexcept { return *train_; }
  const std::shared_ptr<const InteractionMatrix>& train_ptr() const noexcept { return train_; }
  std::size_t n_users() const noexcept { return train_->n_users(); }
  std::size_t n_items() const noexcept { return train_->n_items(); }

  // Raw relevance scores of every item for a training user; `out` has
  // n_items entries. Nothing is masked.
  void score_user(Index user, std::span<double> out) const;
  // Scores for an arbitrary profile (folding-in). Throws Error when the
  // model cannot score profiles outside its training set.
  void score_profile(SparseRowView profile, std::span<double> out) const;
  bool supports_fold_in() const noexcept;

 private:
  std::string kind_;
  nlohmann::json hyperparameters_;
  std::shared_ptr<const InteractionMatrix> train_;
  ModelArtifact artifact_;
  std::optional<std::size_t> fit_epochs_;
};

using ModelPtr = std::shared_ptr<const FittedModel>;

// ---- scoring surface ----------------------------------------------------------

struct ScoreVector {
  Index user = 0;
  std::vector<double> scores;   // -infinity at excluded positions
  std::vector<Index> excluded;  // sorted
};

// Scores of a training user. exclude_seen masks the user's train items and,
// when given, the user's entries in `also_exclude` (e.g. validation).
ScoreVector score_all(const FittedModel& model, Index user, bool exclude_seen,
                      const InteractionMatrix* also_exclude = nullptr);
// Scores of a folded-in profile; exclude_profile masks the profile items.
ScoreVector score_fold_in(const FittedModel& model, Index user, SparseRowView profile, bool exclude_profile);

// First n items by descending score, smaller index first on ties. Items at
// -infinity are never returned.
std::vector<Index> top_n(std::span<const double> scores, std::size_t n);
std::vector<Index> recommend(const FittedModel& model, Index user, std::size_t n, bool exclude_seen,
                             const InteractionMatrix* also_exclude = nullptr);

// ---- fitting -------------------------------------------------------------------

FittedModel fit_top_popular(const InteractionMatrix& train);

// Collaborative KNN. Axis items: neighbourhoods over item columns, user
// profiles scored through them. Axis users: neighbourhoods over user rows.
FittedModel fit_knn(const InteractionMatrix& train, Axis axis, const SimilarityConfig& cfg);
// Content-based KNN: similarity from content rows (entities of `axis`) only.
FittedModel fit_knn_cbf(const InteractionMatrix& train, const ContentMatrix& content, Axis axis,
                        const SimilarityConfig& cfg);
// Hybrid KNN: collaborative vectors extended by content features scaled by
// content_weight. content_weight == 0 yields the collaborative model.
FittedModel fit_knn_cfcbf(const InteractionMatrix& train, const ContentMatrix& content, Axis axis,
                          const SimilarityConfig& cfg, double content_weight);

// Two-step random walk item similarity. Transition probabilities are the
// weights raised to alpha and normalized per row.
FittedModel fit_p3alpha(const InteractionMatrix& train, std::size_t top_k, double alpha, bool normalize_similarity);
// P3alpha with column j divided by popularity(j)^beta before pruning.
FittedModel fit_rp3beta(const InteractionMatrix& train, std::size_t top_k, double alpha, double beta,
                        bool normalize_similarity);

// Truncated SVD by seeded randomized range finding (5 power iterations,
// 10 oversampling columns). Exact for inputs of rank <= num_factors; for
// other inputs the leading factors carry the usual randomized-SVD error.
FittedModel fit_pure_svd(const InteractionMatrix& train, std::size_t num_factors, const FoldInConfig& fold_in,
                         std::uint64_t seed);

enum class Confidence { linear, log };
std::string_view to_string(Confidence c);
Confidence parse_confidence(std::string_view s);

struct IalsConfig {
  std::size_t num_factors = 50;
  std::size_t epochs = 15;
  Confidence confidence = Confidence::linear;
  double alpha = 1.0;
  double epsilon = 1.0;
  double reg = 1e-3;
  FoldInConfig fold_in;
  std::uint64_t seed = 0;

  void validate() const;
};

// c = 1 + alpha * r (linear) or 1 + alpha * log(1 + r / epsilon) (log).
double ials_confidence(const IalsConfig& cfg, double weight);
// Sum over all (u, i) of c_ui (p_ui - u.v)^2 plus reg (|U|^2 + |V|^2),
// with p = 1 on the support and c = 1 off it.
double ials_objective(const InteractionMatrix& train, const IalsConfig& cfg, const Eigen::MatrixXd& user_factors,
                      const Eigen::MatrixXd& item_factors);

// A model trained in epochs whose state can be frozen at any point.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual void advance(std::size_t epochs) = 0;
  virtual std::size_t epochs_done() const = 0;
  virtual FittedModel snapshot() const = 0;
};

// Alternating least squares with exact f x f ridge solves. One epoch
// updates all user vectors, then all item vectors. Factors start uniform in
// [0, 0.1) from cfg.seed.
class IalsTrainer final : public Trainable {
 public:
  IalsTrainer(const InteractionMatrix& train, IalsConfig cfg);

  void advance(std::size_t epochs) override;
  std::size_t epochs_done() const override { return epochs_; }
  FittedModel snapshot() const override;

  const Eigen::MatrixXd& user_factors() const noexcept { return users_; }
  const Eigen::MatrixXd& item_factors() const noexcept { return items_; }

 private:
  void solve_side(const CsrMatrix& rows, const Eigen::MatrixXd& fixed, Eigen::MatrixXd& solved) const;

  std::shared_ptr<const InteractionMatrix> train_;
  IalsConfig cfg_;
  CsrMatrix confidence_by_user_;  // c - 1 on the support
  CsrMatrix confidence_by_item_;
  Eigen::MatrixXd users_;
  Eigen::MatrixXd items_;
  std::size_t epochs_ = 0;
};

// Runs cfg.epochs epochs.
FittedModel fit_ials(const InteractionMatrix& train, const IalsConfig& cfg);

struct SlimConfig {
  std::size_t top_k = 100;
  double l1_ratio = 0.1;
  double alpha = 1.0;
  std::size_t max_iter = 100;
  double tol = 1e-4;

  void validate() const;
};

// Per target item j, minimizes
//   1/(2 n_users) |x_j - X w|^2 + alpha l1_ratio |w|_1 + alpha (1 - l1_ratio)/2 |w|^2
// subject to w >= 0 and w_j = 0, by cyclic coordinate descent over the item
// Gram matrix. Column j of the weights keeps its top_k entries.
FittedModel fit_slim(const InteractionMatrix& train, const SlimConfig& cfg,
                     std::optional<std::size_t> memory_budget_bytes = std::nullopt);

// Closed form: P = (X^T X + l2_norm I)^-1, B_ij = -P_ij / P_jj, B_jj = 0.
// Throws ResourceError when the dense workspace exceeds the budget.
FittedModel fit_ease(const InteractionMatrix& train, double l2_norm,
                     std::optional<std::size_t> memory_budget_bytes = std::nullopt);

// Dense X^T X (item Gram matrix).
Eigen::MatrixXd item_gram(const InteractionMatrix& train);

// ---- registry ------------------------------------------------------------------

struct FitContext {
  const InteractionMatrix* train = nullptr;
  const ContentMatrix* item_content = nullptr;
  const ContentMatrix* user_content = nullptr;
  std::uint64_t seed = 0;
  std::optional<std::size_t> memory_budget_bytes;
};

struct AlgorithmInfo {
  std::string id;
  std::string description;
  bool iterative = false;
  bool needs_item_content = false;
  bool needs_user_content = false;
};

// The thirteen baselines, in presentation order.
const std::vector<AlgorithmInfo>& algorithms();
// Throws ConfigError for unknown ids.
const AlgorithmInfo& algorithm_info(std::string_view id);
bool is_algorithm(std::string_view id);

// Fits `id` with parameters given as JSON (keys as in the search spaces).
// Unknown keys are rejected.
FittedModel fit_algorithm(std::string_view id, const nlohmann::json& params, const FitContext& ctx);
// Incremental trainer for iterative algorithms; "epochs" in params is ignored.
std::unique_ptr<Trainable> make_trainable(std::string_view id, const nlohmann::json& params, const FitContext& ctx);

// ---- persistence -----------------------------------------------------------------

// Binary container; see docs/model_format.md.
void save_model(const std::filesystem::path& path, const FittedModel& model);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace recbase
