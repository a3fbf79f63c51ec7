#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "recbase/models.hpp"

namespace recbase {

namespace {

const std::vector<std::string> kSimilarityKeys = {"similarity",    "topK",         "shrink",
                                                  "normalize",     "asymmetric_alpha", "tversky_alpha",
                                                  "tversky_beta",  "feature_weighting"};

class Params {
 public:
  Params(std::string_view id, const nlohmann::json& j) : id_(id), j_(j) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: parameters must be an object", id_));
  }

  void allow(const std::vector<std::string>& keys) {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError(fmt::format("{}: unknown parameter '{}'", id_, key));
      }
    }
  }

  double real(const std::string& key, double fallback) const {
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(fmt::format("{}: '{}' must be a number", id_, key));
    return v.get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number()) {
      const double d = v.get<double>();
      if (d >= 0.0 && std::floor(d) == d) return static_cast<std::size_t>(d);
    }
    throw ConfigError(fmt::format("{}: '{}' must be a nonnegative integer", id_, key));
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(fmt::format("{}: '{}' must be true or false", id_, key));
    return v.get<bool>();
  }

  std::string text(const std::string& key, std::string fallback) const {
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(fmt::format("{}: '{}' must be a string", id_, key));
    return v.get<std::string>();
  }

  const nlohmann::json& json() const { return j_; }

 private:
  std::string_view id_;
  const nlohmann::json& j_;
};

std::vector<std::string> with(std::vector<std::string> keys, std::initializer_list<std::string> more) {
  keys.insert(keys.end(), more);
  return keys;
}

FoldInConfig fold_in_from(const Params& p) {
  FoldInConfig f;
  f.mode = parse_cold_user_mode(p.text("fold_in_mode", "item_similarity"));
  if (p.json().contains("fold_in_topK")) f.top_k = p.count("fold_in_topK", 0);
  return f;
}

IalsConfig ials_from(const Params& p, std::uint64_t seed) {
  IalsConfig cfg;
  cfg.num_factors = p.count("num_factors", cfg.num_factors);
  cfg.epochs = p.count("epochs", cfg.epochs);
  cfg.confidence = parse_confidence(p.text("confidence", "linear"));
  cfg.alpha = p.real("alpha", cfg.alpha);
  cfg.epsilon = p.real("epsilon", cfg.epsilon);
  cfg.reg = p.real("reg", cfg.reg);
  cfg.fold_in = fold_in_from(p);
  cfg.seed = seed;
  return cfg;
}

const std::vector<std::string> kIalsKeys = {"num_factors", "epochs", "confidence",   "alpha",
                                            "epsilon",     "reg",    "fold_in_mode", "fold_in_topK"};

const InteractionMatrix& train_of(std::string_view id, const FitContext& ctx) {
  if (!ctx.train) throw ConfigError(fmt::format("{}: no training data", id));
  return *ctx.train;
}

const ContentMatrix& content_of(std::string_view id, const ContentMatrix* c, std::string_view which) {
  if (!c) throw ConfigError(fmt::format("{}: requires {} content features", id, which));
  return *c;
}

}  // namespace

const std::vector<AlgorithmInfo>& algorithms() {
  static const std::vector<AlgorithmInfo> list = {
      {"toppop", "Recommends the items with the most interactions to everyone", false, false, false},
      {"userknn_cf", "User-based nearest neighbours on interaction vectors", false, false, false},
      {"itemknn_cf", "Item-based nearest neighbours on interaction vectors", false, false, false},
      {"userknn_cbf", "User-based nearest neighbours on user content features", false, false, true},
      {"itemknn_cbf", "Item-based nearest neighbours on item content features", false, true, false},
      {"userknn_cfcbf", "User-based nearest neighbours on interactions plus weighted user features", false, false,
       true},
      {"itemknn_cfcbf", "Item-based nearest neighbours on interactions plus weighted item features", false, true,
       false},
      {"p3alpha", "Two-step random walk between users and items", false, false, false},
      {"rp3beta", "Random walk similarity penalized by target item popularity", false, false, false},
      {"puresvd", "Truncated singular value decomposition of the interaction matrix", false, false, false},
      {"ials", "Implicit-feedback matrix factorization by alternating least squares", true, false, false},
      {"slim", "Sparse item-item regression with elastic-net penalty", false, false, false},
      {"ease", "Closed-form item-item regression with l2 penalty and zero diagonal", false, false, false},
  };
  return list;
}

bool is_algorithm(std::string_view id) {
  const auto& list = algorithms();
  return std::any_of(list.begin(), list.end(), [&](const AlgorithmInfo& a) { return a.id == id; });
}

const AlgorithmInfo& algorithm_info(std::string_view id) {
  for (const auto& a : algorithms()) {
    if (a.id == id) return a;
  }
  throw ConfigError(fmt::format("unknown algorithm '{}'", id));
}

FittedModel fit_algorithm(std::string_view id, const nlohmann::json& params, const FitContext& ctx) {
  algorithm_info(id);
  Params p(id, params);
  const InteractionMatrix& train = train_of(id, ctx);
  if (id == "toppop") {
    p.allow({});
    return fit_top_popular(train);
  }
  if (id == "itemknn_cf" || id == "userknn_cf") {
    p.allow(kSimilarityKeys);
    return fit_knn(train, id == "itemknn_cf" ? Axis::items : Axis::users, similarity_config_from_json(params));
  }
  if (id == "itemknn_cbf") {
    p.allow(kSimilarityKeys);
    return fit_knn_cbf(train, content_of(id, ctx.item_content, "item"), Axis::items,
                       similarity_config_from_json(params));
  }
  if (id == "userknn_cbf") {
    p.allow(kSimilarityKeys);
    return fit_knn_cbf(train, content_of(id, ctx.user_content, "user"), Axis::users,
                       similarity_config_from_json(params));
  }
  if (id == "itemknn_cfcbf" || id == "userknn_cfcbf") {
    p.allow(with(kSimilarityKeys, {"w"}));
    nlohmann::json sim = params;
    sim.erase("w");
    const bool items = id == "itemknn_cfcbf";
    const auto& content = items ? content_of(id, ctx.item_content, "item") : content_of(id, ctx.user_content, "user");
    return fit_knn_cfcbf(train, content, items ? Axis::items : Axis::users, similarity_config_from_json(sim),
                         p.real("w", 1.0));
  }
  if (id == "p3alpha") {
    p.allow({"topK", "alpha", "normalize_similarity"});
    return fit_p3alpha(train, p.count("topK", 100), p.real("alpha", 1.0), p.flag("normalize_similarity", false));
  }
  if (id == "rp3beta") {
    p.allow({"topK", "alpha", "beta", "normalize_similarity"});
    return fit_rp3beta(train, p.count("topK", 100), p.real("alpha", 1.0), p.real("beta", 0.0),
                       p.flag("normalize_similarity", false));
  }
  if (id == "puresvd") {
    p.allow({"num_factors", "fold_in_mode", "fold_in_topK"});
    return fit_pure_svd(train, p.count("num_factors", 50), fold_in_from(p), ctx.seed);
  }
  if (id == "ials") {
    p.allow(kIalsKeys);
    return fit_ials(train, ials_from(p, ctx.seed));
  }
  if (id == "slim") {
    p.allow({"topK", "l1_ratio", "alpha", "max_iter", "tol"});
    SlimConfig cfg;
    cfg.top_k = p.count("topK", cfg.top_k);
    cfg.l1_ratio = p.real("l1_ratio", cfg.l1_ratio);
    cfg.alpha = p.real("alpha", cfg.alpha);
    cfg.max_iter = p.count("max_iter", cfg.max_iter);
    cfg.tol = p.real("tol", cfg.tol);
    return fit_slim(train, cfg, ctx.memory_budget_bytes);
  }
  // ease
  p.allow({"l2_norm"});
  return fit_ease(train, p.real("l2_norm", 1e3), ctx.memory_budget_bytes);
}

std::unique_ptr<Trainable> make_trainable(std::string_view id, const nlohmann::json& params, const FitContext& ctx) {
  if (!algorithm_info(id).iterative) throw ConfigError(fmt::format("{} is not trained in epochs", id));
  Params p(id, params);
  p.allow(kIalsKeys);
  return std::make_unique<IalsTrainer>(train_of(id, ctx), ials_from(p, ctx.seed));
}

}  // namespace recbase
