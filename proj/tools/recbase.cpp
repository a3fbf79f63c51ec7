#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "recbase/audit.hpp"
#include "recbase/experiment.hpp"

namespace fs = std::filesystem;
using namespace recbase;

namespace {

int cmd_validate(const std::vector<std::string>& paths) {
  int status = kExitOk;
  for (const auto& path : paths) {
    try {
      const auto diagnostics = validate_config(read_config_json(path));
      if (diagnostics.empty()) {
        fmt::print("{}: ok\n", path);
        continue;
      }
      status = kExitConfig;
      for (const auto& d : diagnostics) {
        fmt::print("{}: {}: {}\n", path, d.path.empty() ? "<root>" : d.path, d.message);
      }
    } catch (const Error& e) {
      status = kExitConfig;
      fmt::print("{}: {}\n", path, e.what());
    }
  }
  return status;
}

int cmd_list(bool with_spaces) {
  for (const auto& info : algorithms()) {
    fmt::print("{:<16} {}\n", info.id, info.description);
    if (with_spaces) fmt::print("  {}\n", to_json(builtin_space(info.id)).dump());
  }
  return kExitOk;
}

int cmd_audit(const std::string& bundle_dir, const std::string& negatives_file, std::optional<std::size_t> target,
              const std::string& popularity_out) {
  const auto bundle = read_bundle(bundle_dir, false);
  nlohmann::json out = {{"split", to_json(audit_split(bundle))}};
  std::size_t defects = 0;
  if (!negatives_file.empty()) {
    const auto pairs = read_negative_pairs(negatives_file);
    const auto report = audit_negatives(bundle, pairs, target);
    defects = report.defects();
    out["negatives"] = to_json(report);
  } else if (bundle.negatives) {
    const auto report = audit_negatives(bundle, target);
    defects = report.defects();
    out["negatives"] = to_json(report);
  }
  if (!popularity_out.empty()) write_popularity_csv(popularity_out, popularity_profile(bundle));
  fmt::print("{}\n", out.dump(2));
  return defects > 0 ? kExitWarnings : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reproducible top-n recommendation baselines"};
  app.require_subcommand(1);
  app.set_version_flag("--version", RECBASE_VERSION);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->envname("RECBASE_LOG_LEVEL");

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> threads;
  std::optional<double> memory_gb;
  bool parallel = false;
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed")->envname("RECBASE_SEED");
  run->add_option("--output-dir", output_dir, "Override the output directory")->envname("RECBASE_OUTPUT_DIR");
  run->add_option("--threads", threads, "Worker threads")->envname("RECBASE_THREADS")->check(CLI::PositiveNumber);
  run->add_option("--memory-budget-gb", memory_gb, "Dense workspace limit")
      ->envname("RECBASE_MEMORY_BUDGET_GB")
      ->check(CLI::PositiveNumber);
  run->add_flag("--parallel-algorithms", parallel, "Fit algorithms concurrently");

  auto* validate = app.add_subcommand("validate", "Check configs without running them");
  std::vector<std::string> validate_paths;
  validate->add_option("configs", validate_paths, "Config files")->required();

  auto* list = app.add_subcommand("list-algorithms", "Algorithm ids and default search spaces");
  bool with_spaces = false;
  list->add_flag("--spaces", with_spaces, "Print each default search space");

  auto* audit = app.add_subcommand("audit", "Audit a split directory");
  std::string bundle_dir;
  std::string negatives_file;
  std::optional<std::size_t> target;
  std::string popularity_out;
  audit->add_option("bundle", bundle_dir, "Directory written by a run (split/) or an external split")
      ->required()
      ->check(CLI::ExistingDirectory);
  audit->add_option("--negatives", negatives_file, "Raw user<TAB>item negatives file")->check(CLI::ExistingFile);
  audit->add_option("--target", target, "Expected negatives per user");
  audit->add_option("--popularity-csv", popularity_out, "Write the popularity profile here");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("recbase"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*validate) return cmd_validate(validate_paths);
    if (*list) return cmd_list(with_spaces);
    if (*audit) return cmd_audit(bundle_dir, negatives_file, target, popularity_out);

    ExperimentConfig cfg;
    try {
      cfg = load_config(config_path);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return kExitConfig;
    }
    RunOptions options;
    options.seed = seed;
    if (output_dir) options.output_dir = fs::path(*output_dir);
    options.threads = threads;
    options.memory_budget_gb = memory_gb;
    options.parallel_algorithms = parallel;
    options.base_dir = fs::path(config_path).parent_path();
    const auto summary = run_experiment(cfg, options);
    for (const auto& o : summary.algorithms) {
      fmt::print("{:<24} {}\n", o.label, o.ok ? fmt::format("ok ({:.1f}s)", o.seconds) : "FAILED: " + o.error);
    }
    fmt::print("results in {} ({} warnings)\n", summary.output_dir.string(), summary.warnings);
    return summary.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitRuntime;
  }
}
