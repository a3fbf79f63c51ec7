#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "recbase/tune.hpp"

namespace recbase {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double clamp01(double u) { return std::clamp(u, 0.0, 1.0); }

}  // namespace

void ParamSpec::validate() const {
  if (name.empty()) throw ConfigError("search space: parameter without a name");
  std::visit(Overloaded{
                 [&](const IntegerUniform& k) {
                   if (k.lo >= k.hi) throw ConfigError(fmt::format("{}: need lo < hi", name));
                 },
                 [&](const RealUniform& k) {
                   if (!(k.lo < k.hi)) throw ConfigError(fmt::format("{}: need lo < hi", name));
                 },
                 [&](const RealLogUniform& k) {
                   if (!(k.lo < k.hi)) throw ConfigError(fmt::format("{}: need lo < hi", name));
                   if (!(k.lo > 0.0)) throw ConfigError(fmt::format("{}: log-uniform needs lo > 0", name));
                 },
                 [&](const Categorical& k) {
                   if (k.values.empty()) throw ConfigError(fmt::format("{}: categorical without values", name));
                 },
             },
             kind);
}

nlohmann::json ParamSpec::sample(SeededRng& rng) const {
  return std::visit(Overloaded{
                        [&](const IntegerUniform& k) -> nlohmann::json { return rng.integer(k.lo, k.hi); },
                        [&](const RealUniform& k) -> nlohmann::json { return rng.uniform(k.lo, k.hi); },
                        [&](const RealLogUniform& k) -> nlohmann::json {
                          return std::exp(rng.uniform(std::log(k.lo), std::log(k.hi)));
                        },
                        [&](const Categorical& k) -> nlohmann::json { return k.values[rng.below(k.values.size())]; },
                    },
                    kind);
}

double ParamSpec::encode(const nlohmann::json& value) const {
  return std::visit(Overloaded{
                        [&](const IntegerUniform& k) {
                          return clamp01((value.get<double>() - static_cast<double>(k.lo)) /
                                         static_cast<double>(k.hi - k.lo));
                        },
                        [&](const RealUniform& k) { return clamp01((value.get<double>() - k.lo) / (k.hi - k.lo)); },
                        [&](const RealLogUniform& k) {
                          return clamp01((std::log(value.get<double>()) - std::log(k.lo)) /
                                         (std::log(k.hi) - std::log(k.lo)));
                        },
                        [&](const Categorical& k) {
                          if (k.values.size() == 1) return 0.0;
                          const auto it = std::find(k.values.begin(), k.values.end(), value);
                          if (it == k.values.end()) throw ConfigError(fmt::format("{}: value {} not in the space", name, value.dump()));
                          return static_cast<double>(it - k.values.begin()) / static_cast<double>(k.values.size() - 1);
                        },
                    },
                    kind);
}

nlohmann::json ParamSpec::decode(double unit) const {
  const double u = clamp01(unit);
  return std::visit(Overloaded{
                        [&](const IntegerUniform& k) -> nlohmann::json {
                          const auto span = static_cast<double>(k.hi - k.lo);
                          return std::clamp(k.lo + static_cast<std::int64_t>(std::llround(u * span)), k.lo, k.hi);
                        },
                        [&](const RealUniform& k) -> nlohmann::json { return k.lo + u * (k.hi - k.lo); },
                        [&](const RealLogUniform& k) -> nlohmann::json {
                          return std::exp(std::log(k.lo) + u * (std::log(k.hi) - std::log(k.lo)));
                        },
                        [&](const Categorical& k) -> nlohmann::json {
                          const auto i = static_cast<std::size_t>(std::llround(u * static_cast<double>(k.values.size() - 1)));
                          return k.values[std::min(i, k.values.size() - 1)];
                        },
                    },
                    kind);
}

void SearchSpace::validate() const {
  if (!is_algorithm(algorithm)) throw ConfigError(fmt::format("search space: unknown algorithm '{}'", algorithm));
  if (!fixed.is_object()) throw ConfigError("search space: fixed must be an object");
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (params[i].name == params[j].name) throw ConfigError(fmt::format("search space: '{}' listed twice", params[i].name));
    }
    if (fixed.contains(params[i].name)) {
      throw ConfigError(fmt::format("search space: '{}' is both fixed and searched", params[i].name));
    }
  }
}

nlohmann::json SearchSpace::sample(SeededRng& rng) const {
  nlohmann::json out = fixed;
  for (const auto& p : params) out[p.name] = p.sample(rng);
  return out;
}

namespace {

ParamSpec top_k() { return {"topK", IntegerUniform{5, 1000}}; }
ParamSpec shrink() { return {"shrink", IntegerUniform{0, 1000}}; }
ParamSpec flag(std::string name) { return {std::move(name), Categorical{{true, false}}}; }
ParamSpec always_true(std::string name) { return {std::move(name), Categorical{{true}}}; }
ParamSpec weighting() { return {"feature_weighting", Categorical{{"none", "tfidf", "bm25"}}}; }
ParamSpec exponent(std::string name) { return {std::move(name), RealUniform{0.0, 2.0}}; }

std::vector<ParamSpec> knn_params(Measure m) {
  switch (m) {
    case Measure::cosine:
      return {top_k(), shrink(), flag("normalize"), weighting()};
    case Measure::dice:
    case Measure::jaccard:
      return {top_k(), shrink(), flag("normalize")};
    case Measure::asymmetric_cosine:
      return {top_k(), shrink(), always_true("normalize"), exponent("asymmetric_alpha"), weighting()};
    case Measure::tversky:
      return {top_k(), shrink(), always_true("normalize"), exponent("tversky_alpha"), exponent("tversky_beta")};
  }
  return {};
}

}  // namespace

SearchSpace builtin_space(std::string_view algorithm, Measure similarity) {
  SearchSpace s;
  s.algorithm = std::string(algorithm_info(algorithm).id);
  if (algorithm.find("knn_") != std::string_view::npos) {
    s.fixed["similarity"] = std::string(to_string(similarity));
    s.params = knn_params(similarity);
    if (algorithm.ends_with("_cfcbf")) s.params.push_back({"w", RealLogUniform{1e-2, 1e2}});
  } else if (algorithm == "p3alpha") {
    s.params = {top_k(), exponent("alpha"), flag("normalize_similarity")};
  } else if (algorithm == "rp3beta") {
    s.params = {top_k(), exponent("alpha"), exponent("beta"), flag("normalize_similarity")};
  } else if (algorithm == "slim") {
    s.params = {top_k(), {"l1_ratio", RealLogUniform{1e-5, 1.0}}, {"alpha", RealUniform{1e-3, 1.0}}};
  } else if (algorithm == "puresvd") {
    s.params = {{"num_factors", IntegerUniform{1, 350}}};
  } else if (algorithm == "ials") {
    s.params = {{"num_factors", IntegerUniform{1, 200}},
                {"confidence", Categorical{{"linear", "log"}}},
                {"alpha", RealLogUniform{1e-3, 50.0}},
                {"epsilon", RealLogUniform{1e-3, 10.0}},
                {"reg", RealLogUniform{1e-5, 1e-2}}};
  } else if (algorithm == "ease") {
    s.params = {{"l2_norm", RealLogUniform{1.0, 1e7}}};
  }
  return s;
}

nlohmann::json to_json(const ParamSpec& spec) {
  nlohmann::json j = {{"name", spec.name}};
  std::visit(Overloaded{
                 [&](const IntegerUniform& k) {
                   j["type"] = "integer_uniform";
                   j["low"] = k.lo;
                   j["high"] = k.hi;
                 },
                 [&](const RealUniform& k) {
                   j["type"] = "real_uniform";
                   j["low"] = k.lo;
                   j["high"] = k.hi;
                 },
                 [&](const RealLogUniform& k) {
                   j["type"] = "real_log_uniform";
                   j["low"] = k.lo;
                   j["high"] = k.hi;
                 },
                 [&](const Categorical& k) {
                   j["type"] = "categorical";
                   j["values"] = k.values;
                 },
             },
             spec.kind);
  return j;
}

ParamSpec param_spec_from_json(const nlohmann::json& j) {
  try {
    ParamSpec p;
    p.name = j.at("name").get<std::string>();
    const auto type = j.at("type").get<std::string>();
    if (type == "integer_uniform") {
      p.kind = IntegerUniform{j.at("low").get<std::int64_t>(), j.at("high").get<std::int64_t>()};
    } else if (type == "real_uniform") {
      p.kind = RealUniform{j.at("low").get<double>(), j.at("high").get<double>()};
    } else if (type == "real_log_uniform") {
      p.kind = RealLogUniform{j.at("low").get<double>(), j.at("high").get<double>()};
    } else if (type == "categorical") {
      p.kind = Categorical{j.at("values").get<std::vector<nlohmann::json>>()};
    } else {
      throw ConfigError(fmt::format("parameter '{}': unknown type '{}'", p.name, type));
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("parameter spec: {}", e.what()));
  }
}

nlohmann::json to_json(const SearchSpace& space) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : space.params) params.push_back(to_json(p));
  return {{"algorithm", space.algorithm}, {"fixed", space.fixed}, {"params", std::move(params)}};
}

SearchSpace search_space_from_json(const nlohmann::json& j) {
  try {
    SearchSpace s;
    s.algorithm = j.at("algorithm").get<std::string>();
    s.fixed = j.value("fixed", nlohmann::json::object());
    for (const auto& p : j.value("params", nlohmann::json::array())) s.params.push_back(param_spec_from_json(p));
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("search space: {}", e.what()));
  }
}

}  // namespace recbase
