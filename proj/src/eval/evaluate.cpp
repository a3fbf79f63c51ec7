#include <algorithm>
#include <fstream>
#include <optional>

#include <fmt/format.h>

#include "recbase/eval.hpp"

namespace recbase {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::sampled: return "sampled";
    case Protocol::full_ranking: return "full_ranking";
    case Protocol::user_holdout: return "user_holdout";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "sampled") return Protocol::sampled;
  if (s == "full_ranking") return Protocol::full_ranking;
  if (s == "user_holdout") return Protocol::user_holdout;
  throw ConfigError(fmt::format("unknown evaluation protocol '{}'", s));
}

namespace {

enum class Outcome { evaluated, no_ground_truth, no_candidates };

struct UserResult {
  Outcome outcome = Outcome::no_ground_truth;
  std::vector<double> values;
};

std::vector<Index> rank_candidates(std::span<const double> scores, std::vector<Index> candidates) {
  std::sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  return candidates;
}

UserResult evaluate_user(const FittedModel& model, const EvaluationTask& task, const MetricRequest& request,
                         Index user, std::vector<double>& scores) {
  UserResult result;
  if (user >= task.ground_truth->n_users()) return result;
  const auto truth = task.ground_truth->user_row(user);
  if (truth.empty()) return result;
  std::vector<Index> ranked;
  switch (task.protocol) {
    case Protocol::sampled: {
      const auto it = task.negatives->find(user);
      if (it == task.negatives->end() || it->second.empty()) {
        result.outcome = Outcome::no_candidates;
        return result;
      }
      std::vector<Index> candidates(truth.indices.begin(), truth.indices.end());
      candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      model.score_user(user, scores);
      ranked = rank_candidates(scores, std::move(candidates));
      break;
    }
    case Protocol::full_ranking: {
      const auto sv = score_all(model, user, task.exclude_seen, task.also_exclude);
      ranked = top_n(sv.scores, request.cutoffs.back());
      break;
    }
    case Protocol::user_holdout: {
      const auto sv = score_fold_in(model, user, task.fold_in->user_row(user), true);
      ranked = top_n(sv.scores, request.cutoffs.back());
      break;
    }
  }
  result.outcome = Outcome::evaluated;
  result.values = user_metrics(ranked, truth.indices, request);
  return result;
}

void check_task(const FittedModel& model, const EvaluationTask& task) {
  if (!task.ground_truth) throw Error("evaluate: no ground truth");
  if (task.ground_truth->n_items() != model.n_items()) {
    throw Error(fmt::format("evaluate: ground truth has {} items, model has {}", task.ground_truth->n_items(),
                            model.n_items()));
  }
  if (task.protocol == Protocol::sampled && !task.negatives) throw Error("evaluate: sampled protocol needs negatives");
  if (task.protocol == Protocol::user_holdout) {
    if (!task.fold_in) throw Error("evaluate: user hold-out protocol needs fold-in profiles");
    if (!model.supports_fold_in()) throw Error(fmt::format("evaluate: {} cannot score fold-in profiles", model.kind()));
  } else if (task.ground_truth->n_users() != model.n_users()) {
    throw Error(fmt::format("evaluate: ground truth has {} users, model has {}", task.ground_truth->n_users(),
                            model.n_users()));
  }
}

}  // namespace

EvaluationReport evaluate(const FittedModel& model, const EvaluationTask& task, const MetricRequest& request,
                          bool keep_per_user) {
  request.validate();
  check_task(model, task);
  std::vector<Index> users = task.users;
  if (task.protocol != Protocol::user_holdout || users.empty()) {
    users.resize(task.ground_truth->n_users());
    for (Index u = 0; u < users.size(); ++u) users[u] = u;
  }
  std::vector<UserResult> results(users.size());
  parallel_for(users.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(model.n_items());
    for (std::size_t i = begin; i < end; ++i) results[i] = evaluate_user(model, task, request, users[i], scores);
  });

  EvaluationReport report;
  report.algorithm = model.kind();
  report.protocol = task.protocol;
  report.request = request;
  std::vector<CompensatedSum> sums(request.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    auto& r = results[i];
    switch (r.outcome) {
      case Outcome::no_ground_truth: ++report.n_users_skipped_no_ground_truth; continue;
      case Outcome::no_candidates: ++report.n_users_skipped_no_candidates; continue;
      case Outcome::evaluated: break;
    }
    ++report.n_users_evaluated;
    for (std::size_t s = 0; s < sums.size(); ++s) sums[s].add(r.values[s]);
    if (keep_per_user) {
      report.users.push_back(users[i]);
      report.per_user.push_back(std::move(r.values));
    }
  }
  report.means.resize(sums.size(), 0.0);
  if (report.n_users_evaluated > 0) {
    for (std::size_t s = 0; s < sums.size(); ++s) {
      report.means[s] = sums[s].value() / static_cast<double>(report.n_users_evaluated);
    }
  }
  return report;
}

EvaluationReport evaluate_sampled(const FittedModel& model, const SplitBundle& bundle, const MetricRequest& request,
                                  bool keep_per_user) {
  if (!bundle.negatives) throw Error("evaluate_sampled: bundle has no negatives");
  EvaluationTask task;
  task.protocol = Protocol::sampled;
  task.ground_truth = &bundle.test;
  task.negatives = &*bundle.negatives;
  return evaluate(model, task, request, keep_per_user);
}

EvaluationReport evaluate_full_ranking(const FittedModel& model, const SplitBundle& bundle,
                                       const MetricRequest& request, bool exclude_seen, bool exclude_validation,
                                       bool keep_per_user) {
  EvaluationTask task;
  task.protocol = Protocol::full_ranking;
  task.ground_truth = &bundle.test;
  task.exclude_seen = exclude_seen;
  if (exclude_validation && bundle.validation) task.also_exclude = &*bundle.validation;
  return evaluate(model, task, request, keep_per_user);
}

EvaluationReport evaluate_user_holdout(const FittedModel& model, const SplitBundle& bundle,
                                       const MetricRequest& request, bool keep_per_user) {
  if (!bundle.fold_in) throw Error("evaluate_user_holdout: bundle has no fold-in profiles");
  if (bundle.test_users.empty()) throw Error("evaluate_user_holdout: bundle has no held-out test users");
  EvaluationTask task;
  task.protocol = Protocol::user_holdout;
  task.ground_truth = &bundle.test;
  task.fold_in = &*bundle.fold_in;
  task.users = bundle.test_users;
  return evaluate(model, task, request, keep_per_user);
}

std::string reports_csv(std::span<const EvaluationReport> reports) {
  std::string out = "algorithm,metric,cutoff,value,n_users\n";
  for (const auto& r : reports) {
    for (Metric m : r.request.metrics) {
      for (std::size_t k : r.request.cutoffs) {
        out += fmt::format("{},{},{},{:.8f},{}\n", r.algorithm, to_string(m), k, r.mean(m, k), r.n_users_evaluated);
      }
    }
  }
  return out;
}

void write_reports_csv(const std::filesystem::path& path, std::span<const EvaluationReport> reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  out << reports_csv(reports);
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json values = nlohmann::json::object();
  for (Metric m : report.request.metrics) {
    nlohmann::json per_cutoff = nlohmann::json::object();
    for (std::size_t k : report.request.cutoffs) per_cutoff[std::to_string(k)] = report.mean(m, k);
    values[std::string(to_string(m))] = std::move(per_cutoff);
  }
  return {{"algorithm", report.algorithm},
          {"protocol", to_string(report.protocol)},
          {"values", std::move(values)},
          {"n_users_evaluated", report.n_users_evaluated},
          {"n_users_skipped_no_ground_truth", report.n_users_skipped_no_ground_truth},
          {"n_users_skipped_no_candidates", report.n_users_skipped_no_candidates}};
}

void write_per_user_csv(const std::filesystem::path& path, const EvaluationReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  out << "user";
  for (Metric m : report.request.metrics) {
    for (std::size_t k : report.request.cutoffs) out << fmt::format(",{}@{}", to_string(m), k);
  }
  out << '\n';
  for (std::size_t i = 0; i < report.users.size(); ++i) {
    out << report.users[i];
    for (double v : report.per_user[i]) out << fmt::format(",{:.8f}", v);
    out << '\n';
  }
}

}  // namespace recbase
