#include <chrono>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "recbase/audit.hpp"
#include "recbase/experiment.hpp"

namespace recbase {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path resolve(const std::string& path, const fs::path& base) {
  const fs::path p(path);
  if (p.is_absolute() || fs::exists(p) || base.empty()) return p;
  const auto alt = base / p;
  return fs::exists(alt) ? alt : p;
}

std::string file_stem(std::string_view label) {
  std::string out(label);
  for (char& c : out) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                      c == '-' || c == '.';
    if (!safe) c = '_';
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

IdMap read_id_map(const fs::path& path, std::size_t expected) {
  IdMap map;
  std::ifstream in(path);
  if (!in) {
    for (std::size_t i = 0; i < expected; ++i) map.intern(std::to_string(i));
    return map;
  }
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    map.intern(tab == std::string::npos ? line : line.substr(tab + 1));
  }
  if (map.size() != expected) {
    throw ParseError(path.string(), 0, fmt::format("{} ids for {} entities", map.size(), expected));
  }
  return map;
}

SplitBundle make_split(const InteractionMatrix& m, const SplitSpec& s, const SeededRng& rng) {
  if (s.protocol == "random_holdout") return split_random_holdout(m, s.test_ratio, rng);
  if (s.protocol == "leave_last_out") return split_leave_last_out(m, s.with_validation);
  if (s.protocol == "leave_one_out_random") return split_leave_one_out_random(m, rng);
  if (s.protocol == "user_holdout") {
    return split_user_holdout(m, s.n_validation_users, s.n_test_users, s.profile_ratio, rng);
  }
  if (s.protocol == "fixed_per_user") return split_fixed_per_user(m, s.per_user, rng);
  throw ConfigError(fmt::format("protocol '{}' does not split a matrix", s.protocol));
}

struct Prepared {
  SplitBundle bundle;
  IdMap users;
  IdMap items;
  std::optional<ContentMatrix> item_content;
  std::optional<ContentMatrix> user_content;
  std::string dataset_digest;
  std::size_t n_interactions = 0;
};

Prepared prepare(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& base) {
  Prepared p;
  const SeededRng root(seed);
  const auto& split = cfg.split;
  if (split.test.protocol == "bundle") {
    const auto dir = resolve(split.test.path, base);
    p.bundle = read_bundle(dir);
    p.users = read_id_map(dir / "users.tsv", p.bundle.train.n_users());
    p.items = read_id_map(dir / "items.tsv", p.bundle.train.n_items());
    std::vector<const InteractionMatrix*> parts{&p.bundle.train, &p.bundle.test};
    if (p.bundle.validation) parts.push_back(&*p.bundle.validation);
    const auto all = merge(parts);
    p.n_interactions = all.nnz();
    p.dataset_digest = dataset_digest(all);
  } else {
    auto ds = load_interactions(resolve(cfg.dataset.path, base), cfg.dataset.schema);
    spdlog::info("loaded {} interactions, {} users, {} items", ds.matrix.nnz(), ds.matrix.n_users(),
                 ds.matrix.n_items());
    for (const auto& step : cfg.dataset.preprocessing) {
      if (step.kind == PreprocessStep::Kind::binarize) {
        ds.matrix = binarize(ds.matrix, step.threshold);
      } else {
        auto f = k_core_filter(ds.matrix, step.min_user, step.min_item, step.iterative);
        ds.matrix = std::move(f.matrix);
        ds.users = ds.users.select(f.kept_users);
        ds.items = ds.items.select(f.kept_items);
      }
    }
    spdlog::info("after preprocessing: {} interactions, {} users, {} items", ds.matrix.nnz(), ds.matrix.n_users(),
                 ds.matrix.n_items());
    p.n_interactions = ds.matrix.nnz();
    p.dataset_digest = dataset_digest(ds.matrix);
    p.bundle = make_split(ds.matrix, split.test, root.derive(1));
    if (split.validation) {
      auto inner = make_split(p.bundle.train, *split.validation, root.derive(2));
      p.bundle = with_validation_from(std::move(p.bundle), std::move(inner));
    }
    p.users = std::move(ds.users);
    p.items = std::move(ds.items);
  }
  p.bundle.provenance.dataset_digest = p.dataset_digest;
  if (cfg.negatives && !p.bundle.negatives) {
    p.bundle = sample_negatives(std::move(p.bundle), *cfg.negatives, root.derive(3));
  }
  p.bundle.validate(split.allow_validation_in_train);
  for (const auto& w : p.bundle.provenance.warnings) warn(w);

  if (cfg.dataset.item_content) {
    p.item_content = load_content(resolve(cfg.dataset.item_content->path, base), cfg.dataset.item_content->schema,
                                  p.items);
  }
  if (cfg.dataset.user_content) {
    p.user_content = load_content(resolve(cfg.dataset.user_content->path, base), cfg.dataset.user_content->schema,
                                  p.users);
  }
  return p;
}

bool is_knn(std::string_view id) { return id.find("knn") != std::string_view::npos; }

SearchSpace space_for(const AlgorithmConfig& a) {
  const Measure measure = a.similarity.value_or(Measure::cosine);
  SearchSpace space = a.space ? *a.space : builtin_space(a.id, measure);
  if (is_knn(a.id) && !space.fixed.contains("similarity")) space.fixed["similarity"] = std::string(to_string(measure));
  // Explicit params pin a value and take it out of the search.
  for (const auto& [key, value] : a.params.items()) {
    space.fixed[key] = value;
    std::erase_if(space.params, [&](const ParamSpec& s) { return s.name == key; });
  }
  return space;
}

json fixed_params(const AlgorithmConfig& a) {
  json params = a.params;
  if (is_knn(a.id) && !params.contains("similarity")) {
    params["similarity"] = std::string(to_string(a.similarity.value_or(Measure::cosine)));
  }
  return params;
}

struct Shared {
  const ExperimentConfig& cfg;
  const Prepared& data;
  const TuningData& tuning;
  std::uint64_t seed;
  std::optional<std::size_t> memory_budget;
  fs::path out_dir;
};

EvaluationReport evaluate_test(const FittedModel& model, const Shared& s) {
  const auto& ev = s.cfg.evaluation;
  const MetricRequest request{ev.metrics, ev.cutoffs};
  switch (ev.protocol) {
    case Protocol::sampled:
      return evaluate_sampled(model, s.data.bundle, request, ev.keep_per_user);
    case Protocol::full_ranking:
      return evaluate_full_ranking(model, s.data.bundle, request, true, ev.exclude_validation, ev.keep_per_user);
    case Protocol::user_holdout:
      return evaluate_user_holdout(model, s.data.bundle, request, ev.keep_per_user);
  }
  throw Error("unknown protocol");
}

AlgorithmOutcome run_algorithm(const AlgorithmConfig& a, std::size_t position, const Shared& s) {
  AlgorithmOutcome out;
  out.label = a.display_name();
  out.id = a.id;
  const auto start = Clock::now();
  const auto stem = file_stem(out.label);
  const std::uint64_t seed = SeededRng(s.seed).derive(1000 + position).next_u64();
  try {
    std::optional<FittedModel> model;
    const auto space = space_for(a);
    if (a.tune && !space.params.empty()) {
      if (s.tuning.validation == nullptr) throw ConfigError("tuning needs a validation set");
      TuneOptions options;
      options.search.budget = s.cfg.tuning.budget;
      options.search.n_random_init = s.cfg.tuning.n_random_init;
      options.search.strategy = s.cfg.tuning.strategy;
      options.search.log_path = s.out_dir / "trials" / (stem + ".jsonl");
      options.target_metric = s.cfg.tuning.target_metric;
      options.target_cutoff = s.cfg.tuning.target_cutoff;
      options.early_stop = s.cfg.tuning.early_stop;
      options.seed = seed;
      options.memory_budget_bytes = s.memory_budget;
      auto tuned = tune_and_refit(space, s.tuning, options);
      out.params = tuned.params;
      out.best_validation = tuned.search.best.objective;
      model.emplace(std::move(tuned.model));
    } else {
      out.params = a.tune ? space.fixed : fixed_params(a);
      const bool has_validation = s.tuning.validation != nullptr && !s.tuning.validation_in_train;
      const auto train = has_validation ? refit_matrix(s.tuning) : *s.tuning.train;
      FitContext ctx{&train, s.tuning.item_content, s.tuning.user_content, seed, s.memory_budget};
      model.emplace(fit_algorithm(a.id, out.params, ctx));
    }
    auto report = evaluate_test(*model, s);
    report.algorithm = out.label;
    if (s.cfg.save_models) save_model(s.out_dir / "models" / (stem + ".rbm"), *model);
    if (s.cfg.evaluation.keep_per_user) write_per_user_csv(s.out_dir / "per_user" / (stem + ".csv"), report);
    out.report = std::move(report);
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
    spdlog::error("{}: {}", out.label, out.error);
  }
  out.seconds = seconds_since(start);
  return out;
}

std::string column_name(Metric m, std::size_t cutoff) {
  std::string_view name;
  switch (m) {
    case Metric::precision: name = "P"; break;
    case Metric::recall: name = "R"; break;
    case Metric::map: name = "MAP"; break;
    case Metric::ndcg: name = "NDCG"; break;
    case Metric::mrr: name = "MRR"; break;
    case Metric::hit_rate: name = "HR"; break;
  }
  return fmt::format("{}@{}", name, cutoff);
}

void run_audit(const ExperimentConfig& cfg, const Prepared& data, const fs::path& dir) {
  fs::create_directories(dir);
  try {
    write_text(dir / "split_audit.json", to_json(audit_split(data.bundle)).dump(2) + "\n");
    write_popularity_csv(dir / "popularity.csv", popularity_profile(data.bundle));
    if (data.bundle.negatives) {
      const auto report = audit_negatives(data.bundle, cfg.negatives);
      write_text(dir / "negatives_audit.json", to_json(report).dump(2) + "\n");
      if (report.defects() > 0) warn(fmt::format("negative sampling audit found {} defects", report.defects()));
    }
  } catch (const Error& e) {
    warn(fmt::format("audit skipped: {}", e.what()));
  }
}

}  // namespace

std::string comparison_markdown(std::span<const EvaluationReport> reports) {
  if (reports.empty()) return "";
  const auto& request = reports.front().request;
  std::vector<std::pair<Metric, std::size_t>> columns;
  for (Metric m : request.metrics) {
    for (std::size_t k : request.cutoffs) columns.emplace_back(m, k);
  }
  std::string out = "| Algorithm |";
  std::string rule = "|---|";
  for (const auto& [m, k] : columns) {
    out += fmt::format(" {} |", column_name(m, k));
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  std::vector<double> best(columns.size(), -std::numeric_limits<double>::infinity());
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < columns.size(); ++c) best[c] = std::max(best[c], r.mean(columns[c].first, columns[c].second));
  }
  for (const auto& r : reports) {
    out += fmt::format("| {} |", r.algorithm);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double v = r.mean(columns[c].first, columns[c].second);
      out += v == best[c] ? fmt::format(" **{:.4f}** |", v) : fmt::format(" {:.4f} |", v);
    }
    out += "\n";
  }
  return out;
}

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto start = Clock::now();
  reset_warning_count();
  if (options.threads) set_num_threads(*options.threads);
  const std::uint64_t seed = options.seed.value_or(cfg.seed);
  const auto gb = options.memory_budget_gb ? options.memory_budget_gb : cfg.memory_budget_gb;
  std::optional<std::size_t> memory_budget;
  if (gb) memory_budget = static_cast<std::size_t>(*gb * 1024.0 * 1024.0 * 1024.0);

  RunSummary summary;
  summary.output_dir = options.output_dir.value_or(fs::path(cfg.output_dir));
  const auto& out_dir = summary.output_dir;
  for (const char* sub : {"split", "trials", "audit"}) fs::create_directories(out_dir / sub);
  if (cfg.save_models) fs::create_directories(out_dir / "models");
  if (cfg.evaluation.keep_per_user) fs::create_directories(out_dir / "per_user");

  const auto data_start = Clock::now();
  const Prepared data = prepare(cfg, seed, options.base_dir);
  const double data_seconds = seconds_since(data_start);
  write_bundle(out_dir / "split", data.bundle, &data.users, &data.items);
  if (cfg.audit) run_audit(cfg, data, out_dir / "audit");

  TuningData tuning;
  tuning.train = &data.bundle.train;
  tuning.protocol = cfg.evaluation.protocol;
  tuning.item_content = data.item_content ? &*data.item_content : nullptr;
  tuning.user_content = data.user_content ? &*data.user_content : nullptr;
  tuning.validation_in_train = cfg.split.allow_validation_in_train;
  if (data.bundle.validation) {
    tuning.validation = &*data.bundle.validation;
  } else if (cfg.split.allow_validation_in_train) {
    tuning.validation = &data.bundle.train;
  }
  if (data.bundle.fold_in) tuning.fold_in = &*data.bundle.fold_in;
  tuning.validation_users = data.bundle.validation_users;
  NegativeSets validation_negatives;
  if (cfg.evaluation.protocol == Protocol::sampled && tuning.validation != nullptr) {
    const auto n = cfg.tuning.validation_negatives ? cfg.tuning.validation_negatives : cfg.negatives;
    if (n) {
      validation_negatives = sample_validation_negatives(data.bundle.train, *tuning.validation, *n,
                                                         SeededRng(seed).derive(4));
      tuning.validation_negatives = &validation_negatives;
    }
  }

  const Shared shared{cfg, data, tuning, seed, memory_budget, out_dir};
  summary.algorithms.resize(cfg.algorithms.size());
  if (options.parallel_algorithms && cfg.algorithms.size() > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
      workers.emplace_back([&, i] { summary.algorithms[i] = run_algorithm(cfg.algorithms[i], i, shared); });
    }
  } else {
    for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
      spdlog::info("[{}/{}] {}", i + 1, cfg.algorithms.size(), cfg.algorithms[i].display_name());
      summary.algorithms[i] = run_algorithm(cfg.algorithms[i], i, shared);
    }
  }

  std::vector<EvaluationReport> reports;
  json algorithms = json::array();
  for (const auto& o : summary.algorithms) {
    json entry = {{"label", o.label}, {"id", o.id}, {"status", o.ok ? "ok" : "failed"}, {"seconds", o.seconds}};
    if (!o.ok) entry["error"] = o.error;
    if (!o.params.is_null()) entry["params"] = o.params;
    if (o.best_validation) entry["best_validation"] = *o.best_validation;
    if (o.report) {
      entry["report"] = to_json(*o.report);
      reports.push_back(*o.report);
    }
    algorithms.push_back(std::move(entry));
  }
  write_reports_csv(out_dir / "report.csv", reports);
  write_text(out_dir / "comparison.md", comparison_markdown(reports));

  summary.warnings = warning_count();
  const bool any_failed =
      std::any_of(summary.algorithms.begin(), summary.algorithms.end(), [](const auto& o) { return !o.ok; });
  summary.exit_code = any_failed ? kExitRuntime : summary.warnings > 0 ? kExitWarnings : kExitOk;

  json provenance = {{"config_digest", config_digest(cfg)},
                     {"config", to_json(cfg)},
                     {"seed", seed},
                     {"library_version", RECBASE_VERSION},
                     {"dataset_digest", data.dataset_digest},
                     {"n_interactions", data.n_interactions},
                     {"n_users", data.bundle.train.n_users()},
                     {"n_items", data.bundle.train.n_items()},
                     {"splitter", data.bundle.provenance.splitter},
                     {"split_params", data.bundle.provenance.params},
                     {"threads", num_threads()},
                     {"timings", {{"data_seconds", data_seconds}, {"total_seconds", seconds_since(start)}}},
                     {"warnings", summary.warnings},
                     {"exit_code", summary.exit_code}};
  json doc = {{"provenance", std::move(provenance)}, {"algorithms", std::move(algorithms)}};
  write_text(out_dir / "report.json", doc.dump(2) + "\n");
  return summary;
}

}  // namespace recbase
