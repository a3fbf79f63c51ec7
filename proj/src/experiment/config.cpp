#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "recbase/experiment.hpp"

namespace recbase {

using nlohmann::json;

namespace {

std::string join_messages(const std::vector<Diagnostic>& diagnostics) {
  std::string out = "invalid configuration";
  for (const auto& d : diagnostics) out += fmt::format("\n  {}: {}", d.path.empty() ? "<root>" : d.path, d.message);
  return out;
}

std::string child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

std::string element(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

std::string_view type_name(const json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}

bool is_knn(std::string_view id) { return id.find("knn") != std::string_view::npos; }

std::string_view to_string(SearchStrategy s) { return s == SearchStrategy::smbo ? "smbo" : "random"; }

std::string_view to_string(PreprocessStep::Kind k) { return k == PreprocessStep::Kind::binarize ? "binarize" : "k_core"; }

// Walks one document, collecting every problem instead of stopping at the
// first; accessors return the default when a value is unusable.
class Reader {
 public:
  explicit Reader(std::vector<Diagnostic>& out) : out_(out) {}

  void error(const std::string& path, std::string message) { out_.push_back({path, std::move(message)}); }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    error(path, fmt::format("expected an object, got {}", type_name(j)));
    return false;
  }

  void allow(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) return;
    for (const auto& [key, value] : j.items()) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) error(child(path, key), "unknown key");
    }
  }

  const json* find(const json& j, std::string_view key) const {
    if (!j.is_object()) return nullptr;
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  const json* require(const json& j, const std::string& path, std::string_view key) {
    const json* v = find(j, key);
    if (v == nullptr && j.is_object()) error(child(path, key), "required");
    return v;
  }

  std::optional<std::string> text(const json* v, const std::string& path, bool non_empty = true) {
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) {
      error(path, fmt::format("expected a string, got {}", type_name(*v)));
      return std::nullopt;
    }
    auto s = v->get<std::string>();
    if (non_empty && s.empty()) {
      error(path, "must not be empty");
      return std::nullopt;
    }
    return s;
  }

  std::optional<bool> flag(const json* v, const std::string& path) {
    if (v == nullptr) return std::nullopt;
    if (!v->is_boolean()) {
      error(path, fmt::format("expected true or false, got {}", type_name(*v)));
      return std::nullopt;
    }
    return v->get<bool>();
  }

  std::optional<double> real(const json* v, const std::string& path) {
    if (v == nullptr) return std::nullopt;
    if (!v->is_number()) {
      error(path, fmt::format("expected a number, got {}", type_name(*v)));
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<std::uint64_t> count(const json* v, const std::string& path) {
    if (v == nullptr) return std::nullopt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) {
      if (v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
      error(path, "must not be negative");
      return std::nullopt;
    }
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    error(path, fmt::format("expected a non-negative integer, got {}", v->dump()));
    return std::nullopt;
  }

  template <class Parse>
  auto choice(const json* v, const std::string& path, Parse parse) -> std::optional<decltype(parse(""))> {
    auto s = text(v, path);
    if (!s) return std::nullopt;
    try {
      return parse(*s);
    } catch (const Error& e) {
      error(path, e.what());
      return std::nullopt;
    }
  }

 private:
  std::vector<Diagnostic>& out_;
};

template <class T, class U>
void assign(T& target, const std::optional<U>& value) {
  if (value) target = static_cast<T>(*value);
}

ColumnSchema read_schema(Reader& r, const json* j, const std::string& path, ColumnSchema schema) {
  if (j == nullptr || !r.object(*j, path)) return schema;
  r.allow(*j, path, {"delimiter", "user", "item", "weight", "timestamp", "header"});
  if (const auto d = r.text(r.find(*j, "delimiter"), child(path, "delimiter"))) schema.delimiter = *d;
  assign(schema.user, r.count(r.find(*j, "user"), child(path, "user")));
  assign(schema.item, r.count(r.find(*j, "item"), child(path, "item")));
  for (const auto* key : {"weight", "timestamp"}) {
    const json* v = r.find(*j, key);
    auto& slot = std::string_view(key) == "weight" ? schema.weight : schema.timestamp;
    if (v != nullptr && v->is_null()) {
      slot.reset();
    } else if (const auto c = r.count(v, child(path, key))) {
      slot = static_cast<int>(*c);
    }
  }
  assign(schema.header, r.flag(r.find(*j, "header"), child(path, "header")));

  std::vector<int> columns{schema.user, schema.item};
  if (schema.weight) columns.push_back(*schema.weight);
  if (schema.timestamp) columns.push_back(*schema.timestamp);
  std::sort(columns.begin(), columns.end());
  if (std::adjacent_find(columns.begin(), columns.end()) != columns.end()) r.error(path, "columns must be distinct");
  return schema;
}

json schema_json(const ColumnSchema& s) {
  json j = {{"delimiter", s.delimiter}, {"user", s.user}, {"item", s.item}, {"header", s.header}};
  if (s.weight) j["weight"] = *s.weight;
  if (s.timestamp) j["timestamp"] = *s.timestamp;
  return j;
}

std::optional<ContentSource> read_content(Reader& r, const json* j, const std::string& path) {
  if (j == nullptr || !r.object(*j, path)) return std::nullopt;
  r.allow(*j, path, {"path", "schema"});
  ContentSource c;
  // entity, feature[, weight]
  c.schema.user = 0;
  c.schema.item = 1;
  assign(c.path, r.text(r.require(*j, path, "path"), child(path, "path")));
  c.schema = read_schema(r, r.find(*j, "schema"), child(path, "schema"), c.schema);
  return c;
}

DatasetConfig read_dataset(Reader& r, const json& j, const std::string& path, bool path_required) {
  DatasetConfig d;
  if (!r.object(j, path)) return d;
  r.allow(j, path, {"path", "schema", "preprocessing", "item_content", "user_content"});
  const json* p = path_required ? r.require(j, path, "path") : r.find(j, "path");
  assign(d.path, r.text(p, child(path, "path")));
  d.schema = read_schema(r, r.find(j, "schema"), child(path, "schema"), d.schema);
  if (const json* steps = r.find(j, "preprocessing")) {
    const auto sp = child(path, "preprocessing");
    if (!steps->is_array()) {
      r.error(sp, "expected an array of steps");
    } else {
      for (std::size_t i = 0; i < steps->size(); ++i) {
        const auto ep = element(sp, i);
        const json& s = (*steps)[i];
        if (!r.object(s, ep)) continue;
        const auto kind = r.text(r.require(s, ep, "step"), child(ep, "step"));
        if (!kind) continue;
        PreprocessStep step;
        if (*kind == "binarize") {
          r.allow(s, ep, {"step", "threshold"});
          step.kind = PreprocessStep::Kind::binarize;
          assign(step.threshold, r.real(r.require(s, ep, "threshold"), child(ep, "threshold")));
        } else if (*kind == "k_core") {
          r.allow(s, ep, {"step", "min_user", "min_item", "iterative"});
          step.kind = PreprocessStep::Kind::k_core;
          assign(step.min_user, r.count(r.find(s, "min_user"), child(ep, "min_user")));
          assign(step.min_item, r.count(r.find(s, "min_item"), child(ep, "min_item")));
          assign(step.iterative, r.flag(r.find(s, "iterative"), child(ep, "iterative")));
          if (step.min_user == 0 && step.min_item == 0) r.error(ep, "k_core needs min_user or min_item");
        } else {
          r.error(child(ep, "step"), fmt::format("unknown step '{}' (binarize, k_core)", *kind));
          continue;
        }
        d.preprocessing.push_back(step);
      }
    }
  }
  d.item_content = read_content(r, r.find(j, "item_content"), child(path, "item_content"));
  d.user_content = read_content(r, r.find(j, "user_content"), child(path, "user_content"));
  return d;
}

constexpr std::string_view kProtocols[] = {"random_holdout", "leave_last_out", "leave_one_out_random",
                                           "user_holdout", "fixed_per_user", "bundle"};

SplitSpec read_split_spec(Reader& r, const json& j, const std::string& path, bool nested) {
  SplitSpec s;
  if (!r.object(j, path)) return s;
  const auto protocol = r.text(r.require(j, path, "protocol"), child(path, "protocol"));
  if (!protocol) return s;
  if (std::find(std::begin(kProtocols), std::end(kProtocols), *protocol) == std::end(kProtocols)) {
    r.error(child(path, "protocol"), fmt::format("unknown protocol '{}'", *protocol));
    return s;
  }
  s.protocol = *protocol;
  auto allow = [&](std::initializer_list<std::string_view> keys) {
    std::vector<std::string_view> all{"protocol"};
    if (!nested) all.insert(all.end(), {"validation", "allow_validation_in_train"});
    all.insert(all.end(), keys);
    for (const auto& [key, value] : j.items()) {
      if (std::find(all.begin(), all.end(), key) == all.end()) {
        r.error(child(path, key), fmt::format("not a parameter of protocol '{}'", s.protocol));
      }
    }
  };
  auto unit_interval = [&](double& target, std::string_view key) {
    const auto kp = child(path, key);
    if (const auto v = r.real(r.find(j, key), kp)) {
      if (*v > 0.0 && *v < 1.0) {
        target = *v;
      } else {
        r.error(kp, "must lie strictly between 0 and 1");
      }
    }
  };
  if (s.protocol == "random_holdout") {
    allow({"test_ratio"});
    unit_interval(s.test_ratio, "test_ratio");
  } else if (s.protocol == "leave_last_out") {
    allow({"with_validation"});
    assign(s.with_validation, r.flag(r.find(j, "with_validation"), child(path, "with_validation")));
  } else if (s.protocol == "leave_one_out_random") {
    allow({});
  } else if (s.protocol == "user_holdout") {
    allow({"n_validation_users", "n_test_users", "profile_ratio"});
    assign(s.n_validation_users, r.count(r.find(j, "n_validation_users"), child(path, "n_validation_users")));
    const auto nt = r.count(r.require(j, path, "n_test_users"), child(path, "n_test_users"));
    assign(s.n_test_users, nt);
    if (nt && *nt == 0) r.error(child(path, "n_test_users"), "must be at least 1");
    unit_interval(s.profile_ratio, "profile_ratio");
  } else if (s.protocol == "fixed_per_user") {
    allow({"per_user"});
    const auto n = r.count(r.find(j, "per_user"), child(path, "per_user"));
    assign(s.per_user, n);
    if (n && *n == 0) r.error(child(path, "per_user"), "must be at least 1");
  } else {
    allow({"path"});
    assign(s.path, r.text(r.require(j, path, "path"), child(path, "path")));
  }
  if (nested && (s.protocol == "bundle" || s.protocol == "user_holdout")) {
    r.error(child(path, "protocol"), fmt::format("'{}' cannot carve a validation set from train", s.protocol));
  }
  return s;
}

json split_spec_json(const SplitSpec& s) {
  json j = {{"protocol", s.protocol}};
  if (s.protocol == "random_holdout") {
    j["test_ratio"] = s.test_ratio;
  } else if (s.protocol == "leave_last_out") {
    j["with_validation"] = s.with_validation;
  } else if (s.protocol == "user_holdout") {
    j["n_validation_users"] = s.n_validation_users;
    j["n_test_users"] = s.n_test_users;
    j["profile_ratio"] = s.profile_ratio;
  } else if (s.protocol == "fixed_per_user") {
    j["per_user"] = s.per_user;
  } else if (s.protocol == "bundle") {
    j["path"] = s.path;
  }
  return j;
}

SplitConfig read_split(Reader& r, const json& j, const std::string& path) {
  SplitConfig c;
  if (!r.object(j, path)) return c;
  c.test = read_split_spec(r, j, path, false);
  if (const json* v = r.find(j, "validation")) c.validation = read_split_spec(r, *v, child(path, "validation"), true);
  assign(c.allow_validation_in_train,
         r.flag(r.find(j, "allow_validation_in_train"), child(path, "allow_validation_in_train")));
  if (c.validation && c.test.with_validation) {
    r.error(child(path, "validation"), "leave_last_out with_validation already provides a validation set");
  }
  return c;
}

AlgorithmConfig read_algorithm(Reader& r, const json& j, const std::string& path) {
  AlgorithmConfig a;
  if (!r.object(j, path)) return a;
  r.allow(j, path, {"id", "label", "similarity", "tune", "params", "space"});
  assign(a.id, r.text(r.require(j, path, "id"), child(path, "id")));
  if (!a.id.empty() && !is_algorithm(a.id)) {
    r.error(child(path, "id"), fmt::format("unknown algorithm '{}'", a.id));
    a.id.clear();
    return a;
  }
  assign(a.label, r.text(r.find(j, "label"), child(path, "label")));
  if (const json* s = r.find(j, "similarity")) {
    if (!a.id.empty() && !is_knn(a.id)) {
      r.error(child(path, "similarity"), fmt::format("'{}' has no similarity measure", a.id));
    } else {
      a.similarity = r.choice(s, child(path, "similarity"), parse_measure);
    }
  }
  assign(a.tune, r.flag(r.find(j, "tune"), child(path, "tune")));
  if (const json* p = r.find(j, "params")) {
    if (p->is_object()) {
      a.params = *p;
    } else {
      r.error(child(path, "params"), fmt::format("expected an object, got {}", type_name(*p)));
    }
  }
  if (const json* sp = r.find(j, "space")) {
    const auto spp = child(path, "space");
    if (!a.tune) r.error(spp, "a search space needs tune = true");
    try {
      json with_id = *sp;
      if (with_id.is_object() && !with_id.contains("algorithm")) with_id["algorithm"] = a.id;
      a.space = search_space_from_json(with_id);
      if (!a.id.empty() && a.space->algorithm != a.id) {
        r.error(spp, fmt::format("space is for '{}', not '{}'", a.space->algorithm, a.id));
      }
    } catch (const Error& e) {
      r.error(spp, e.what());
    }
  }
  return a;
}

TuningConfig read_tuning(Reader& r, const json& j, const std::string& path) {
  TuningConfig t;
  if (!r.object(j, path)) return t;
  r.allow(j, path, {"budget", "n_random_init", "strategy", "target", "early_stopping", "validation_negatives"});
  const auto budget = r.count(r.find(j, "budget"), child(path, "budget"));
  assign(t.budget, budget);
  if (budget && *budget == 0) r.error(child(path, "budget"), "must be at least 1");
  assign(t.n_random_init, r.count(r.find(j, "n_random_init"), child(path, "n_random_init")));
  if (const auto s = r.text(r.find(j, "strategy"), child(path, "strategy"))) {
    if (*s == "smbo") {
      t.strategy = SearchStrategy::smbo;
    } else if (*s == "random") {
      t.strategy = SearchStrategy::random;
    } else {
      r.error(child(path, "strategy"), fmt::format("unknown strategy '{}' (smbo, random)", *s));
    }
  }
  if (const json* target = r.find(j, "target")) {
    const auto tp = child(path, "target");
    if (r.object(*target, tp)) {
      r.allow(*target, tp, {"metric", "cutoff"});
      assign(t.target_metric, r.choice(r.find(*target, "metric"), child(tp, "metric"), parse_metric));
      const auto cutoff = r.count(r.find(*target, "cutoff"), child(tp, "cutoff"));
      assign(t.target_cutoff, cutoff);
      if (cutoff && *cutoff == 0) r.error(child(tp, "cutoff"), "must be at least 1");
    }
  }
  if (const json* es = r.find(j, "early_stopping")) {
    const auto ep = child(path, "early_stopping");
    if (r.object(*es, ep)) {
      r.allow(*es, ep, {"epochs_per_step", "patience_steps", "epochs_max"});
      assign(t.early_stop.epochs_per_step, r.count(r.find(*es, "epochs_per_step"), child(ep, "epochs_per_step")));
      assign(t.early_stop.patience_steps, r.count(r.find(*es, "patience_steps"), child(ep, "patience_steps")));
      assign(t.early_stop.epochs_max, r.count(r.find(*es, "epochs_max"), child(ep, "epochs_max")));
      try {
        t.early_stop.validate();
      } catch (const Error& e) {
        r.error(ep, e.what());
      }
    }
  }
  if (const json* vn = r.find(j, "validation_negatives")) {
    t.validation_negatives = r.count(vn, child(path, "validation_negatives"));
    if (t.validation_negatives == std::size_t{0}) r.error(child(path, "validation_negatives"), "must be at least 1");
  }
  return t;
}

EvaluationConfig read_evaluation(Reader& r, const json& j, const std::string& path) {
  EvaluationConfig e;
  if (!r.object(j, path)) return e;
  r.allow(j, path, {"protocol", "metrics", "cutoffs", "exclude_validation", "keep_per_user"});
  assign(e.protocol, r.choice(r.require(j, path, "protocol"), child(path, "protocol"), parse_protocol));
  if (const json* m = r.find(j, "metrics")) {
    const auto mp = child(path, "metrics");
    if (!m->is_array() || m->empty()) {
      r.error(mp, "expected a non-empty array of metric names");
    } else {
      e.metrics.clear();
      for (std::size_t i = 0; i < m->size(); ++i) {
        if (const auto v = r.choice(&(*m)[i], element(mp, i), parse_metric)) e.metrics.push_back(*v);
      }
    }
  }
  if (const json* c = r.find(j, "cutoffs")) {
    const auto cp = child(path, "cutoffs");
    if (!c->is_array() || c->empty()) {
      r.error(cp, "expected a non-empty array of cutoffs");
    } else {
      e.cutoffs.clear();
      for (std::size_t i = 0; i < c->size(); ++i) {
        if (const auto v = r.count(&(*c)[i], element(cp, i))) e.cutoffs.push_back(*v);
      }
    }
  }
  try {
    MetricRequest{e.metrics, e.cutoffs}.validate();
  } catch (const Error& err) {
    r.error(path, err.what());
  }
  assign(e.exclude_validation, r.flag(r.find(j, "exclude_validation"), child(path, "exclude_validation")));
  assign(e.keep_per_user, r.flag(r.find(j, "keep_per_user"), child(path, "keep_per_user")));
  return e;
}

bool provides_validation(const SplitConfig& s) {
  return s.validation.has_value() || s.allow_validation_in_train || s.test.protocol == "bundle" ||
         (s.test.protocol == "leave_last_out" && s.test.with_validation) ||
         (s.test.protocol == "user_holdout" && s.test.n_validation_users > 0);
}

ExperimentConfig read_config(const json& j, std::vector<Diagnostic>& diagnostics) {
  Reader r(diagnostics);
  ExperimentConfig c;
  if (!r.object(j, "")) return c;
  r.allow(j, "", {"name", "seed", "output_dir", "memory_budget_gb", "save_models", "audit", "dataset", "split",
                  "negatives", "algorithms", "tuning", "evaluation"});
  assign(c.name, r.text(r.require(j, "", "name"), "name"));
  assign(c.seed, r.count(r.find(j, "seed"), "seed"));
  assign(c.output_dir, r.text(r.find(j, "output_dir"), "output_dir"));
  if (const auto gb = r.real(r.find(j, "memory_budget_gb"), "memory_budget_gb")) {
    if (*gb > 0.0) {
      c.memory_budget_gb = *gb;
    } else {
      r.error("memory_budget_gb", "must be positive");
    }
  }
  assign(c.save_models, r.flag(r.find(j, "save_models"), "save_models"));
  assign(c.audit, r.flag(r.find(j, "audit"), "audit"));

  if (const json* s = r.require(j, "", "split")) c.split = read_split(r, *s, "split");
  const bool from_bundle = c.split.test.protocol == "bundle";
  if (const json* d = from_bundle ? r.find(j, "dataset") : r.require(j, "", "dataset")) c.dataset = read_dataset(r, *d, "dataset", !from_bundle);
  if (const json* n = r.find(j, "negatives")) {
    c.negatives = r.count(n, "negatives");
    if (c.negatives == std::size_t{0}) r.error("negatives", "must be at least 1");
  }

  if (const json* algos = r.require(j, "", "algorithms")) {
    if (!algos->is_array() || algos->empty()) {
      r.error("algorithms", "expected a non-empty array");
    } else {
      std::set<std::string> labels;
      for (std::size_t i = 0; i < algos->size(); ++i) {
        const auto ap = element("algorithms", i);
        auto a = read_algorithm(r, (*algos)[i], ap);
        if (a.id.empty()) continue;
        if (!labels.insert(a.display_name()).second) {
          r.error(ap, fmt::format("duplicate label '{}'", a.display_name()));
        }
        const auto& info = algorithm_info(a.id);
        if (info.needs_item_content && !c.dataset.item_content) {
          r.error(ap, fmt::format("'{}' needs dataset.item_content", a.id));
        }
        if (info.needs_user_content && !c.dataset.user_content) {
          r.error(ap, fmt::format("'{}' needs dataset.user_content", a.id));
        }
        if (a.tune && !provides_validation(c.split)) {
          r.error(ap, "tuning needs a validation set (split.validation, or a protocol that provides one)");
        }
        c.algorithms.push_back(std::move(a));
      }
    }
  }
  if (const json* t = r.find(j, "tuning")) c.tuning = read_tuning(r, *t, "tuning");
  if (const json* e = r.require(j, "", "evaluation")) c.evaluation = read_evaluation(r, *e, "evaluation");

  const auto& ev = c.evaluation;
  if (ev.protocol == Protocol::sampled && !c.negatives && !from_bundle) {
    r.error("negatives", "the sampled protocol needs a negative count");
  }
  if ((ev.protocol == Protocol::user_holdout) != (c.split.test.protocol == "user_holdout") && !from_bundle) {
    r.error("evaluation.protocol", "user_holdout evaluation and the user_holdout split go together");
  }
  if (c.split.test.protocol == "user_holdout" && c.split.validation) {
    r.error("split.validation", "user_holdout draws validation users itself (n_validation_users)");
  }
  if (std::find(ev.metrics.begin(), ev.metrics.end(), c.tuning.target_metric) == ev.metrics.end()) {
    r.error("tuning.target.metric", fmt::format("'{}' is not among evaluation.metrics", to_string(c.tuning.target_metric)));
  }
  return c;
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<Diagnostic> diagnostics)
    : ConfigError(join_messages(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string AlgorithmConfig::display_name() const {
  if (!label.empty()) return label;
  if (similarity) return fmt::format("{}_{}", id, to_string(*similarity));
  return id;
}

std::vector<Diagnostic> validate_config(const json& j) {
  std::vector<Diagnostic> diagnostics;
  read_config(j, diagnostics);
  return diagnostics;
}

ExperimentConfig parse_config(const json& j) {
  std::vector<Diagnostic> diagnostics;
  auto cfg = read_config(j, diagnostics);
  if (!diagnostics.empty()) throw ConfigValidationError(std::move(diagnostics));
  return cfg;
}

json read_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    // byte offset -> line
    const auto text = buffer.str();
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(path.string(), line, e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_config_json(path)); }

json to_json(const ExperimentConfig& c) {
  json dataset = {{"schema", schema_json(c.dataset.schema)}};
  if (!c.dataset.path.empty()) dataset["path"] = c.dataset.path;
  json steps = json::array();
  for (const auto& s : c.dataset.preprocessing) {
    json step = {{"step", to_string(s.kind)}};
    if (s.kind == PreprocessStep::Kind::binarize) {
      step["threshold"] = s.threshold;
    } else {
      step["min_user"] = s.min_user;
      step["min_item"] = s.min_item;
      step["iterative"] = s.iterative;
    }
    steps.push_back(std::move(step));
  }
  dataset["preprocessing"] = std::move(steps);
  if (c.dataset.item_content) {
    dataset["item_content"] = {{"path", c.dataset.item_content->path},
                               {"schema", schema_json(c.dataset.item_content->schema)}};
  }
  if (c.dataset.user_content) {
    dataset["user_content"] = {{"path", c.dataset.user_content->path},
                               {"schema", schema_json(c.dataset.user_content->schema)}};
  }

  json split = split_spec_json(c.split.test);
  split["allow_validation_in_train"] = c.split.allow_validation_in_train;
  if (c.split.validation) split["validation"] = split_spec_json(*c.split.validation);

  json algos = json::array();
  for (const auto& a : c.algorithms) {
    json aj = {{"id", a.id}, {"tune", a.tune}, {"params", a.params}};
    if (!a.label.empty()) aj["label"] = a.label;
    if (a.similarity) aj["similarity"] = to_string(*a.similarity);
    if (a.space) aj["space"] = to_json(*a.space);
    algos.push_back(std::move(aj));
  }

  json tuning = {{"budget", c.tuning.budget},
                 {"n_random_init", c.tuning.n_random_init},
                 {"strategy", to_string(c.tuning.strategy)},
                 {"target", {{"metric", to_string(c.tuning.target_metric)}, {"cutoff", c.tuning.target_cutoff}}},
                 {"early_stopping",
                  {{"epochs_per_step", c.tuning.early_stop.epochs_per_step},
                   {"patience_steps", c.tuning.early_stop.patience_steps},
                   {"epochs_max", c.tuning.early_stop.epochs_max}}}};
  if (c.tuning.validation_negatives) tuning["validation_negatives"] = *c.tuning.validation_negatives;

  json metrics = json::array();
  for (Metric m : c.evaluation.metrics) metrics.push_back(to_string(m));
  json evaluation = {{"protocol", to_string(c.evaluation.protocol)},
                     {"metrics", std::move(metrics)},
                     {"cutoffs", c.evaluation.cutoffs},
                     {"exclude_validation", c.evaluation.exclude_validation},
                     {"keep_per_user", c.evaluation.keep_per_user}};

  json j = {{"name", c.name},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"save_models", c.save_models},
            {"audit", c.audit},
            {"dataset", std::move(dataset)},
            {"split", std::move(split)},
            {"algorithms", std::move(algos)},
            {"tuning", std::move(tuning)},
            {"evaluation", std::move(evaluation)}};
  if (c.negatives) j["negatives"] = *c.negatives;
  if (c.memory_budget_gb) j["memory_budget_gb"] = *c.memory_budget_gb;
  return j;
}

std::string config_digest(const ExperimentConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

}  // namespace recbase
