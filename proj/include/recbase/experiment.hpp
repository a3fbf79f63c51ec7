#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recbase/data.hpp"
#include "recbase/eval.hpp"
#include "recbase/similarity.hpp"
#include "recbase/tune.hpp"

namespace recbase {

// One problem found while validating a configuration; `path` is a JSON
// pointer-like location such as "algorithms[2].id".
struct Diagnostic {
  std::string path;
  std::string message;
};

class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct PreprocessStep {
  enum class Kind { binarize, k_core };
  Kind kind = Kind::binarize;
  double threshold = 0.0;             // binarize: keep weight > threshold
  std::size_t min_user = 0;           // k_core
  std::size_t min_item = 0;
  bool iterative = false;

  friend bool operator==(const PreprocessStep&, const PreprocessStep&) = default;
};

struct ContentSource {
  std::string path;
  ColumnSchema schema;

  friend bool operator==(const ContentSource&, const ContentSource&) = default;
};

struct DatasetConfig {
  std::string path;
  ColumnSchema schema;
  std::vector<PreprocessStep> preprocessing;
  std::optional<ContentSource> item_content;
  std::optional<ContentSource> user_content;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

// protocol: random_holdout | leave_last_out | leave_one_out_random |
// user_holdout | fixed_per_user | bundle (pre-split files in `path`).
struct SplitSpec {
  std::string protocol = "leave_last_out";
  double test_ratio = 0.2;
  bool with_validation = false;  // leave_last_out: second-to-last entry as validation
  std::size_t n_validation_users = 0;
  std::size_t n_test_users = 0;
  double profile_ratio = 0.8;
  std::size_t per_user = 1;
  std::string path;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct SplitConfig {
  SplitSpec test;
  std::optional<SplitSpec> validation;  // carved out of the train part
  bool allow_validation_in_train = false;

  friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct AlgorithmConfig {
  std::string id;
  std::string label;                // report name; derived from id and similarity when empty
  std::optional<Measure> similarity;  // KNN families only
  bool tune = true;
  nlohmann::json params = nlohmann::json::object();  // fixed values (all of them when tune is false)
  std::optional<SearchSpace> space;                 // overrides the builtin space

  std::string display_name() const;
};

struct TuningConfig {
  std::size_t budget = 50;
  std::size_t n_random_init = 15;
  SearchStrategy strategy = SearchStrategy::smbo;
  Metric target_metric = Metric::ndcg;
  std::size_t target_cutoff = 10;
  EarlyStopConfig early_stop;
  std::optional<std::size_t> validation_negatives;  // defaults to the test negative count
};

struct EvaluationConfig {
  Protocol protocol = Protocol::sampled;
  std::vector<Metric> metrics = {Metric::hit_rate, Metric::ndcg};
  std::vector<std::size_t> cutoffs = {10};
  bool exclude_validation = false;
  bool keep_per_user = false;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  SplitConfig split;
  std::optional<std::size_t> negatives;
  std::vector<AlgorithmConfig> algorithms;
  TuningConfig tuning;
  EvaluationConfig evaluation;
  std::string output_dir = "results";
  std::optional<double> memory_budget_gb;
  bool save_models = false;
  bool audit = true;
};

// Every problem in the document, in document order. Empty means valid.
std::vector<Diagnostic> validate_config(const nlohmann::json& j);
// Throws ConfigValidationError carrying all diagnostics.
ExperimentConfig parse_config(const nlohmann::json& j);
// Reads and parses a config file; JSON syntax errors raise ParseError.
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json read_config_json(const std::filesystem::path& path);
// Canonical form: every field spelled out.
nlohmann::json to_json(const ExperimentConfig& cfg);
std::string config_digest(const ExperimentConfig& cfg);

// Per-run overrides (command line flags, environment).
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::size_t> threads;
  std::optional<double> memory_budget_gb;
  bool parallel_algorithms = false;
  // Relative dataset paths that do not exist from the working directory are
  // looked up here (the config file's directory).
  std::filesystem::path base_dir;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitWarnings = 3 };

struct AlgorithmOutcome {
  std::string label;
  std::string id;
  bool ok = false;
  std::string error;
  std::optional<EvaluationReport> report;
  nlohmann::json params;
  std::optional<double> best_validation;
  double seconds = 0.0;
};

struct RunSummary {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::vector<AlgorithmOutcome> algorithms;
  std::size_t warnings = 0;
};

// load -> preprocess -> split -> tune -> refit -> evaluate -> audit ->
// report. An algorithm that fails is reported and the others continue.
// Files written under the output directory:
//   report.csv, report.json, comparison.md, split/, trials/, audit/,
//   models/ (save_models), per_user/ (keep_per_user).
RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// Markdown table, one row per report, best value of each column in bold.
std::string comparison_markdown(std::span<const EvaluationReport> reports);

}  // namespace recbase
