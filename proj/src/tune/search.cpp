#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "recbase/tune.hpp"
#include "surrogate.hpp"

namespace recbase {

nlohmann::json to_json(const Trial& t) {
  nlohmann::json j = {{"trial_index", t.index},
                      {"params", t.params},
                      {"objective", t.objective ? nlohmann::json(*t.objective) : nlohmann::json()},
                      {"fit_epochs", t.fit_epochs ? nlohmann::json(*t.fit_epochs) : nlohmann::json()},
                      {"wall_time_s", t.wall_time_s},
                      {"status", t.status == TrialStatus::ok ? "ok" : "failed"}};
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

Trial trial_from_json(const nlohmann::json& j) {
  Trial t;
  t.index = j.at("trial_index").get<std::size_t>();
  t.params = j.at("params");
  if (!j.at("objective").is_null()) t.objective = j.at("objective").get<double>();
  if (!j.at("fit_epochs").is_null()) t.fit_epochs = j.at("fit_epochs").get<std::size_t>();
  t.wall_time_s = j.value("wall_time_s", 0.0);
  t.status = j.at("status").get<std::string>() == "ok" ? TrialStatus::ok : TrialStatus::failed;
  t.error = j.value("error", "");
  return t;
}

namespace {

std::vector<Trial> read_log(const std::filesystem::path& path) {
  std::vector<Trial> trials;
  std::ifstream in(path);
  if (!in) return trials;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto t = trial_from_json(nlohmann::json::parse(line));
      if (t.index != trials.size()) break;
      trials.push_back(std::move(t));
    } catch (const nlohmann::json::exception&) {
      break;  // torn last line of an interrupted run
    }
  }
  return trials;
}

std::vector<double> encode(const SearchSpace& space, const nlohmann::json& params) {
  std::vector<double> x;
  x.reserve(space.params.size());
  for (const auto& p : space.params) x.push_back(p.encode(params.at(p.name)));
  return x;
}

nlohmann::json decode(const SearchSpace& space, const std::vector<double>& x) {
  nlohmann::json out = space.fixed;
  for (std::size_t d = 0; d < space.params.size(); ++d) out[space.params[d].name] = space.params[d].decode(x[d]);
  return out;
}

bool already_run(const std::vector<Trial>& trials, const nlohmann::json& params) {
  for (const auto& t : trials) {
    if (t.params == params) return true;
  }
  return false;
}

nlohmann::json propose(const SearchSpace& space, const std::vector<Trial>& trials, const SearchOptions& options,
                       SeededRng& rng) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : trials) {
    if (t.status != TrialStatus::ok) continue;
    x.push_back(encode(space, t.params));
    y.push_back(*t.objective);
    best = std::max(best, *t.objective);
  }
  detail::ExtraTrees forest(options.n_trees);
  forest.fit(x, y, rng);

  nlohmann::json chosen;
  double chosen_ei = -1.0;
  for (std::size_t c = 0; c < options.n_candidates; ++c) {
    auto candidate = space.sample(rng);
    const auto [mean, sd] = forest.predict(encode(space, candidate));
    const double ei = detail::expected_improvement(mean, sd, best);
    if (ei > chosen_ei) {
      chosen_ei = ei;
      chosen = std::move(candidate);
    }
  }
  if (already_run(trials, chosen)) {
    // One perturbation in the unit cube, then accept whatever comes out.
    auto u = encode(space, chosen);
    for (auto& v : u) v += 0.05 * rng.normal();
    chosen = decode(space, u);
  }
  return chosen;
}

void append_log(const std::optional<std::filesystem::path>& path, const Trial& t) {
  if (!path) return;
  std::ofstream out(*path, std::ios::app);
  if (!out) throw Error(fmt::format("{}: cannot append trial log", path->string()));
  out << to_json(t).dump() << '\n';
}

}  // namespace

SearchResult search(const SearchSpace& space, const Objective& objective, const SearchOptions& options,
                    const SeededRng& rng) {
  space.validate();
  if (options.budget == 0) throw ConfigError("search: budget must be >= 1");
  if (options.n_random_init == 0) throw ConfigError("search: n_random_init must be >= 1");
  if (options.n_candidates == 0 || options.n_trees == 0) throw ConfigError("search: surrogate needs candidates and trees");

  SearchResult result;
  if (options.log_path) result.trials = read_log(*options.log_path);
  if (result.trials.size() > options.budget) result.trials.resize(options.budget);

  for (std::size_t i = result.trials.size(); i < options.budget; ++i) {
    SeededRng trial_rng = rng.derive(i);
    std::size_t n_ok = 0;
    for (const auto& t : result.trials) n_ok += t.status == TrialStatus::ok;
    const bool random = options.strategy == SearchStrategy::random || i < options.n_random_init || n_ok < 2;

    Trial trial;
    trial.index = i;
    trial.params = random ? space.sample(trial_rng) : propose(space, result.trials, options, trial_rng);
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto outcome = objective(trial.params);
      if (!std::isfinite(outcome.objective)) throw Error("objective is not finite");
      trial.objective = outcome.objective;
      trial.fit_epochs = outcome.fit_epochs;
    } catch (const std::exception& e) {
      trial.status = TrialStatus::failed;
      trial.error = e.what();
      warn(fmt::format("{} trial {} failed: {}", space.algorithm, i, e.what()));
    }
    trial.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    append_log(options.log_path, trial);
    result.trials.push_back(std::move(trial));
  }

  const Trial* best = nullptr;
  for (const auto& t : result.trials) {
    if (t.status == TrialStatus::ok && (!best || *t.objective > *best->objective)) best = &t;
  }
  if (!best) throw Error(fmt::format("{}: every trial failed", space.algorithm));
  result.best = *best;
  return result;
}

}  // namespace recbase
