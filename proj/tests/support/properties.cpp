#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "oracles.hpp"
#include "recbase/audit.hpp"
#include "recbase/eval.hpp"
#include "recbase/models.hpp"
#include "recbase/tune.hpp"

namespace props {

using namespace recbase;
using Eigen::MatrixXd;

namespace {

// Tracks the largest deviation and the first failure message.
class Tally {
 public:
  void deviation(double d, double tol, const std::string& where) {
    measured_ = true;
    if (!(d <= worst_)) worst_ = std::isnan(d) ? worst_ : d;
    if (!(d <= tol)) fail(fmt::format("{}: deviation {:.3e} > {:.1e}", where, d, tol));
  }
  void fail(const std::string& message) {
    if (ok_) first_ = message;
    ok_ = false;
    ++failures_;
  }
  void check(bool condition, const std::string& message) {
    if (!condition) fail(message);
  }
  Verdict verdict(std::size_t cases) const {
    if (ok_ && !measured_) return {true, fmt::format("{} cases", cases)};
    if (ok_) return {true, fmt::format("{} cases, max deviation {:.3e}", cases, worst_)};
    return {false, fmt::format("{} of {} checks failed; first: {}", failures_, cases, first_)};
  }

 private:
  bool ok_ = true;
  bool measured_ = false;
  double worst_ = 0.0;
  std::size_t failures_ = 0;
  std::string first_;
};

double max_abs(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

const CsrMatrix& item_weights(const FittedModel& m) { return std::get<ItemWeightsArtifact>(m.artifact()).weights; }

// Checks `got` (pruned rows) against the unpruned oracle: every kept value
// matches, the row holds min(k, candidates) entries, and nothing dropped is
// larger than what was kept.
void compare_pruned(const SimilarityMatrix& got, const MatrixXd& full, std::size_t k, double tol, Tally& t,
                    const std::string& where) {
  for (Eigen::Index i = 0; i < full.rows(); ++i) {
    const auto row = got.row(static_cast<std::size_t>(i));
    std::size_t candidates = 0;
    for (Eigen::Index j = 0; j < full.cols(); ++j) candidates += full(i, j) != 0.0 ? 1 : 0;
    t.check(row.size() == std::min(k, candidates),
            fmt::format("{} row {}: {} entries, expected {}", where, i, row.size(), std::min(k, candidates)));
    double smallest_kept = std::numeric_limits<double>::infinity();
    std::set<Index> kept;
    for (std::size_t p = 0; p < row.size(); ++p) {
      const Index j = row.indices[p];
      t.deviation(std::abs(row.values[p] - full(i, j)), tol, fmt::format("{} ({}, {})", where, i, j));
      smallest_kept = std::min(smallest_kept, row.values[p]);
      kept.insert(j);
    }
    for (Eigen::Index j = 0; j < full.cols(); ++j) {
      if (full(i, j) == 0.0 || kept.count(static_cast<Index>(j))) continue;
      t.check(full(i, j) <= smallest_kept + tol, fmt::format("{} row {}: dropped {} above kept {}", where, i,
                                                             full(i, j), smallest_kept));
    }
  }
}

}  // namespace

InteractionMatrix random_matrix(SeededRng& rng, std::size_t n_users, std::size_t n_items, double density,
                                bool timestamps) {
  std::vector<Interaction> entries;
  for (Index u = 0; u < n_users; ++u) {
    for (Index i = 0; i < n_items; ++i) {
      if (rng.uniform() >= density) continue;
      Interaction e{u, i, static_cast<double>(rng.integer(1, 5)), std::nullopt};
      if (timestamps) e.timestamp = static_cast<std::int64_t>(entries.size()) * 7 + rng.integer(0, 5);
      entries.push_back(e);
    }
  }
  return InteractionMatrix::from_interactions(n_users, n_items, std::move(entries));
}

Verdict similarity_matches_dense(std::uint64_t seed, std::size_t cases, double tol) {
  SeededRng rng(seed);
  Tally t;
  const Measure measures[] = {Measure::cosine, Measure::asymmetric_cosine, Measure::jaccard, Measure::dice,
                              Measure::tversky};
  const FeatureWeighting schemes[] = {FeatureWeighting::none, FeatureWeighting::tfidf, FeatureWeighting::bm25};
  for (std::size_t c = 0; c < cases; ++c) {
    const auto m = random_matrix(rng, 2 + rng.below(14), 2 + rng.below(12), rng.uniform(0.1, 0.7), false);
    if (m.empty()) continue;
    SimilarityConfig cfg;
    cfg.measure = measures[rng.below(5)];
    cfg.top_k = 1 + rng.below(14);
    cfg.shrink = rng.below(3) == 0 ? 0.0 : rng.uniform(0.0, 10.0);
    cfg.normalize = rng.below(4) != 0;
    cfg.asymmetric_alpha = rng.uniform(0.0, 1.0);
    cfg.tversky_alpha = rng.uniform(0.0, 2.0);
    cfg.tversky_beta = rng.uniform(0.0, 2.0);
    cfg.feature_weighting = is_set_based(cfg.measure) ? FeatureWeighting::none : schemes[rng.below(3)];
    const Axis axis = rng.below(2) == 0 ? Axis::items : Axis::users;
    const MatrixXd x = oracle::dense(m);
    const MatrixXd full = oracle::similarity(axis == Axis::items ? MatrixXd(x.transpose()) : x, cfg);
    const auto got = compute_similarity(m, axis, cfg);
    compare_pruned(got, full, cfg.top_k, tol, t,
                   fmt::format("case {} {} {} {}", c, to_string(cfg.measure), to_string(axis),
                               to_string(cfg.feature_weighting)));
  }
  return t.verdict(cases);
}

Verdict p3alpha_matches_two_step_walk(std::uint64_t seed, std::size_t cases, double tol) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto m = random_matrix(rng, 2 + rng.below(10), 2 + rng.below(10), rng.uniform(0.2, 0.8), false);
    if (m.empty()) continue;
    const double alpha = rng.uniform(0.0, 2.0);
    const double beta = c % 2 == 0 ? 0.0 : rng.uniform(0.0, 2.0);
    const bool normalize = rng.below(2) == 0;
    const std::size_t k = m.n_items();
    const auto model = beta == 0.0 ? fit_p3alpha(m, k, alpha, normalize) : fit_rp3beta(m, k, alpha, beta, normalize);
    MatrixXd expected = oracle::random_walk(oracle::dense(m), alpha, beta);
    if (normalize) {
      for (Eigen::Index i = 0; i < expected.rows(); ++i) {
        const double total = expected.row(i).sum();
        if (total > 0.0) expected.row(i) /= total;
      }
    }
    t.deviation(max_abs(oracle::dense(item_weights(model)), expected), tol,
                fmt::format("case {} alpha {:.3f} beta {:.3f}", c, alpha, beta));
  }
  return t.verdict(cases);
}

Verdict rp3beta_zero_is_p3alpha(std::uint64_t seed, std::size_t cases) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto m = random_matrix(rng, 2 + rng.below(20), 2 + rng.below(20), rng.uniform(0.1, 0.6), false);
    if (m.empty()) continue;
    const double alpha = rng.uniform(0.0, 2.0);
    const std::size_t k = 1 + rng.below(20);
    const bool normalize = rng.below(2) == 0;
    const auto p3 = fit_p3alpha(m, k, alpha, normalize);
    const auto rp3 = fit_rp3beta(m, k, alpha, 0.0, normalize);
    t.check(item_weights(p3) == item_weights(rp3), fmt::format("case {}: matrices differ", c));
  }
  return t.verdict(cases);
}

Verdict slim_matches_coordinate_descent(std::uint64_t seed, std::size_t cases, double tol) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto m = random_matrix(rng, 8, 6, rng.uniform(0.3, 0.7), false);
    if (m.empty()) continue;
    SlimConfig cfg;
    cfg.top_k = m.n_items();
    cfg.l1_ratio = std::pow(10.0, rng.uniform(-3.0, 0.0));
    cfg.alpha = std::pow(10.0, rng.uniform(-3.0, 0.0));
    cfg.max_iter = 100000;
    cfg.tol = 1e-14;
    const auto model = fit_slim(m, cfg);
    const MatrixXd got = oracle::dense(item_weights(model));
    const MatrixXd x = oracle::dense(m);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const Eigen::VectorXd w = oracle::slim_column(x, j, cfg.l1_ratio, cfg.alpha);
      t.deviation((got.col(j) - w).cwiseAbs().maxCoeff(), tol, fmt::format("case {} column {}", c, j));
    }
  }
  return t.verdict(cases);
}

Verdict ease_matches_constrained_least_squares(std::uint64_t seed, std::size_t cases, double tol) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n_items = c < cases / 2 ? 4 : 4 + rng.below(6);
    const auto m = random_matrix(rng, 6 + rng.below(10), n_items, rng.uniform(0.3, 0.8), false);
    if (m.empty()) continue;
    const double l2 = c == 0 ? 1.0 : std::pow(10.0, rng.uniform(-1.0, 2.0));
    const auto model = fit_ease(m, l2);
    const MatrixXd got = std::get<DenseWeightsArtifact>(model.artifact()).weights;
    t.deviation(max_abs(got, oracle::ease(oracle::dense(m), l2)), tol, fmt::format("case {} l2 {:.3f}", c, l2));
  }
  return t.verdict(cases);
}

Verdict ials_objective_non_increasing(std::uint64_t seed, std::size_t cases) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto m = random_matrix(rng, 20, 15, 0.25, false);
    IalsConfig cfg;
    cfg.num_factors = 2 + rng.below(5);
    cfg.confidence = c % 2 == 0 ? Confidence::linear : Confidence::log;
    cfg.alpha = std::pow(10.0, rng.uniform(-1.0, 1.0));
    cfg.epsilon = std::pow(10.0, rng.uniform(-1.0, 1.0));
    cfg.reg = std::pow(10.0, rng.uniform(-3.0, 0.0));
    cfg.seed = rng.next_u64();
    const MatrixXd r = oracle::dense(m);
    MatrixXd conf = MatrixXd::Ones(r.rows(), r.cols());
    for (Eigen::Index u = 0; u < r.rows(); ++u) {
      for (Eigen::Index i = 0; i < r.cols(); ++i) {
        if (r(u, i) == 0.0) continue;
        conf(u, i) = cfg.confidence == Confidence::linear ? 1.0 + cfg.alpha * r(u, i)
                                                          : 1.0 + cfg.alpha * std::log(1.0 + r(u, i) / cfg.epsilon);
      }
    }
    IalsTrainer trainer(m, cfg);
    double previous = oracle::ials_objective(r, conf, trainer.user_factors(), trainer.item_factors(), cfg.reg);
    for (int sweep = 1; sweep <= 15; ++sweep) {
      trainer.advance(1);
      const double now = oracle::ials_objective(r, conf, trainer.user_factors(), trainer.item_factors(), cfg.reg);
      const double library = ials_objective(m, cfg, trainer.user_factors(), trainer.item_factors());
      t.deviation(std::abs(library - now) / std::max(1.0, now), 1e-9, fmt::format("case {} objective", c));
      t.check(now <= previous * (1.0 + 1e-12) + 1e-12,
              fmt::format("case {} sweep {}: objective rose {:.12g} -> {:.12g}", c, sweep, previous, now));
      previous = now;
    }
  }
  return t.verdict(cases);
}

Verdict pure_svd_exact_on_low_rank(std::uint64_t seed, std::size_t cases, double tol) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t nu = 10 + rng.below(30), ni = 8 + rng.below(20), rank = 1 + rng.below(4);
    MatrixXd a(nu, rank), b(ni, rank);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(0.1, 1.0);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(0.1, 1.0);
    const MatrixXd x = a * b.transpose();
    std::vector<Interaction> entries;
    for (Index u = 0; u < nu; ++u) {
      for (Index i = 0; i < ni; ++i) entries.push_back({u, i, x(u, i), std::nullopt});
    }
    const auto m = InteractionMatrix::from_interactions(nu, ni, std::move(entries));
    const auto model = fit_pure_svd(m, rank, FoldInConfig{}, rng.next_u64());
    const auto& f = std::get<FactorArtifact>(model.artifact());
    const MatrixXd rebuilt = f.user_factors * f.item_factors.transpose();
    t.deviation(max_abs(rebuilt, x) / x.cwiseAbs().maxCoeff(), tol, fmt::format("case {} rank {}", c, rank));
  }
  return t.verdict(cases);
}

Verdict metrics_match_reference(std::uint64_t seed, std::size_t cases, double tol) {
  SeededRng rng(seed);
  Tally t;
  const Metric all[] = {Metric::precision, Metric::recall, Metric::map, Metric::ndcg, Metric::mrr, Metric::hit_rate};
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n_items = 5 + rng.below(40);
    std::vector<Index> items(n_items);
    for (Index i = 0; i < n_items; ++i) items[i] = i;
    rng.shuffle(std::span<Index>(items));
    std::vector<Index> ranked(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(1 + rng.below(n_items)));
    rng.shuffle(std::span<Index>(items));
    std::vector<Index> relevant(items.begin(),
                                items.begin() + static_cast<std::ptrdiff_t>(1 + rng.below(std::min<std::size_t>(8, n_items))));
    std::sort(relevant.begin(), relevant.end());
    MetricRequest request{{all, all + 6}, {}};
    for (std::size_t k = 1 + rng.below(3); k <= 25; k += 1 + rng.below(6)) request.cutoffs.push_back(k);
    const auto values = user_metrics(ranked, relevant, request);
    for (Metric m : all) {
      for (std::size_t k : request.cutoffs) {
        const double expected = oracle::metric(ranked, relevant, k, m);
        t.deviation(std::abs(metric_at_k(ranked, relevant, k, m) - expected), tol,
                    fmt::format("case {} {}@{}", c, to_string(m), k));
        t.deviation(std::abs(values[request.slot(m, k)] - expected), tol,
                    fmt::format("case {} one-pass {}@{}", c, to_string(m), k));
      }
    }
  }
  return t.verdict(cases);
}

namespace {

// Validation values scripted per step; the snapshot carries the value so the
// returned model can be checked against the recorded best.
class ScriptedTrainer final : public Trainable {
 public:
  ScriptedTrainer(std::vector<double> per_step, std::size_t epochs_per_step)
      : per_step_(std::move(per_step)), step_(epochs_per_step),
        train_(std::make_shared<const InteractionMatrix>(1, 1)) {}

  void advance(std::size_t epochs) override { epochs_ += epochs; }
  std::size_t epochs_done() const override { return epochs_; }
  FittedModel snapshot() const override {
    const std::size_t step = (epochs_ + step_ - 1) / step_;
    const double value = per_step_.at(std::min(step, per_step_.size()) - 1);
    return FittedModel("scripted", {{"epochs", epochs_}}, train_, PopularityArtifact{{value}}, epochs_);
  }

 private:
  std::vector<double> per_step_;
  std::size_t step_;
  std::shared_ptr<const InteractionMatrix> train_;
  std::size_t epochs_ = 0;
};

double scripted_value(const FittedModel& m) { return std::get<PopularityArtifact>(m.artifact()).popularity.at(0); }

}  // namespace

Verdict early_stopping_rule_cases() {
  Tally t;
  {
    ScriptedTrainer trainer({0.1, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.9}, 5);
    const auto r = early_stop_train(trainer, scripted_value, EarlyStopConfig{5, 5, 500});
    t.check(r.history.size() == 7, fmt::format("plateau: {} steps, expected 7", r.history.size()));
    t.check(r.best_epoch == 10, fmt::format("plateau: best_epoch {}, expected 10", r.best_epoch));
    t.check(r.epochs_trained == 35, fmt::format("plateau: {} epochs trained, expected 35", r.epochs_trained));
    t.check(scripted_value(r.model) == 0.2 && r.best_value == 0.2, "plateau: snapshot does not hold the best value");
  }
  {
    std::vector<double> rising;
    for (int s = 1; s <= 100; ++s) rising.push_back(s / 100.0);
    ScriptedTrainer trainer(rising, 5);
    const auto r = early_stop_train(trainer, scripted_value, EarlyStopConfig{5, 5, 500});
    t.check(r.best_epoch == 500, fmt::format("rising: best_epoch {}, expected 500", r.best_epoch));
    t.check(r.epochs_trained == 500, fmt::format("rising: {} epochs trained", r.epochs_trained));
    t.check(r.model.fit_epochs() == std::size_t{500}, "rising: snapshot not taken at epoch 500");
  }
  {
    // A later equal value is not an improvement.
    ScriptedTrainer trainer({0.3, 0.3, 0.3}, 2);
    const auto r = early_stop_train(trainer, scripted_value, EarlyStopConfig{2, 2, 100});
    t.check(r.best_epoch == 2 && r.history.size() == 3, fmt::format("ties: best_epoch {}", r.best_epoch));
  }
  return t.verdict(3);
}

template <class T>
concept ExposesTest = requires(const T& d) { d.test; };
template <class T>
concept ExposesBundle = requires(const T& d) { d.bundle; };
template <class T>
concept ExposesNegatives = requires(const T& d) { d.negatives; };

static_assert(!ExposesTest<TuningData>);
static_assert(!ExposesBundle<TuningData>);
static_assert(!ExposesNegatives<TuningData>);
static_assert(ExposesTest<SplitBundle>);

Verdict tuner_blind_to_test() {
  // The static_asserts above are the structural check. At run time: two
  // bundles that differ only in their test part tune identically.
  SeededRng rng(11);
  Tally t;
  const auto m = random_matrix(rng, 60, 30, 0.3);
  const auto base = split_leave_last_out(m, true);
  const auto other_test = split_random_holdout(merge(base.train, base.test), 0.3, SeededRng(3)).test;
  auto run = [&](const InteractionMatrix& test) {
    (void)test;  // deliberately unused: there is no way to hand it to the tuner
    TuningData data;
    data.train = &base.train;
    data.validation = &*base.validation;
    data.protocol = Protocol::full_ranking;
    TuneOptions options;
    options.search.budget = 6;
    options.search.n_random_init = 3;
    options.seed = 5;
    return tune_and_refit(builtin_space("itemknn_cf"), data, options);
  };
  const auto a = run(base.test);
  const auto b = run(other_test);
  t.check(a.params == b.params, "tuned parameters depend on the test split");
  t.check(a.search.best.objective == b.search.best.objective, "validation objective depends on the test split");
  return t.verdict(1);
}

namespace {

using RowSet = std::map<Index, double>;

std::vector<RowSet> rows_of(const InteractionMatrix& m) {
  std::vector<RowSet> out(m.n_users());
  for (const auto& e : m.interactions()) out[e.user][e.item] = e.weight;
  return out;
}

void check_partition(const InteractionMatrix& original, const std::vector<const InteractionMatrix*>& parts, Tally& t,
                     const std::string& where) {
  const auto want = rows_of(original);
  std::vector<RowSet> got(original.n_users());
  for (const auto* p : parts) {
    t.check(p->n_users() == original.n_users() && p->n_items() == original.n_items(), where + ": shape changed");
    for (const auto& e : p->interactions()) {
      t.check(!got[e.user].count(e.item), fmt::format("{}: ({}, {}) in two parts", where, e.user, e.item));
      got[e.user][e.item] = e.weight;
    }
  }
  t.check(got == want, where + ": parts do not reassemble the input");
}

}  // namespace

Verdict split_invariants(std::uint64_t seed, std::size_t cases) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t nu = 3 + rng.below(15), ni = 2 + rng.below(15);
    const auto m = random_matrix(rng, nu, ni, rng.uniform(0.05, 0.9));
    const std::string where = fmt::format("case {}", c);
    const auto protocol = rng.below(5);
    const SeededRng split_rng(rng.next_u64());
    try {
      if (protocol == 3) {
        const std::size_t n_test = 1 + rng.below(nu / 2);
        const std::size_t n_val = rng.below(nu - n_test);
        const auto b = split_user_holdout(m, n_val, n_test, rng.uniform(0.1, 0.9), split_rng);
        b.validate();
        const auto want = rows_of(m);
        const auto train = rows_of(b.train);
        std::set<Index> held;
        for (Index u : b.validation_users) held.insert(u);
        for (Index u : b.test_users) {
          t.check(!held.count(u), where + ": user both validation and test");
          held.insert(u);
        }
        t.check(held.size() == n_val + n_test, where + ": wrong number of held-out users");
        for (Index u = 0; u < nu; ++u) {
          if (held.count(u)) {
            t.check(train[u].empty(), where + ": held-out user has train entries");
          } else {
            t.check(train[u] == want[u], where + ": training user changed");
          }
        }
        std::vector<const InteractionMatrix*> parts{&b.train, &b.test, &*b.fold_in};
        if (b.validation) parts.push_back(&*b.validation);
        check_partition(m, parts, t, where + " user_holdout");
        continue;
      }
      SplitBundle b;
      switch (protocol) {
        case 0: b = split_random_holdout(m, rng.uniform(0.05, 0.95), split_rng); break;
        case 1: b = split_leave_last_out(m, rng.below(2) == 0); break;
        case 2: b = split_leave_one_out_random(m, split_rng); break;
        default: b = split_fixed_per_user(m, 1 + rng.below(6), split_rng); break;
      }
      if (!b.validation && rng.below(2) == 0) {
        const auto inner = rng.below(2) == 0 ? split_leave_one_out_random(b.train, split_rng.derive(9))
                                             : split_random_holdout(b.train, 0.3, split_rng.derive(9));
        b = with_validation_from(std::move(b), inner);
      }
      std::optional<std::size_t> n_neg;
      if (rng.below(2) == 0) {
        n_neg = 1 + rng.below(ni + 3);
        b = sample_negatives(std::move(b), *n_neg, split_rng.derive(10));
      }
      b.validate();
      std::vector<const InteractionMatrix*> parts{&b.train, &b.test};
      if (b.validation) parts.push_back(&*b.validation);
      check_partition(m, parts, t, where);

      // Per-protocol test counts.
      const auto want = rows_of(m);
      const auto test = rows_of(b.test);
      for (Index u = 0; u < nu; ++u) {
        const std::size_t n = want[u].size();
        const std::size_t got = test[u].size();
        if (protocol == 1) t.check(got == (n > 0 ? 1u : 0u), where + ": leave-last-out test count");
        if (protocol == 2) t.check(got == (n >= 2 ? 1u : 0u), where + ": leave-one-out test count");
        if (protocol == 0 && n < 2) t.check(got == 0, where + ": tiny user lost its only item");
        if (protocol == 0 && n >= 2) t.check(got >= 1 && got < n, where + ": random holdout test count");
      }
      if (protocol == 1) {
        // The test entry is the most recent one (larger item on ties).
        for (Index u = 0; u < nu; ++u) {
          const auto row = m.user_row(u);
          const auto ts = m.user_timestamps(u);
          if (row.empty()) continue;
          std::size_t best = 0;
          for (std::size_t p = 1; p < row.size(); ++p) {
            if (ts[p] > ts[best] || (ts[p] == ts[best] && row.indices[p] > row.indices[best])) best = p;
          }
          t.check(test[u].count(row.indices[best]) == 1, where + ": leave-last-out picked a non-latest entry");
        }
      }
      if (n_neg) {
        t.check(b.negatives.has_value(), where + ": negatives missing");
        for (const auto& [u, negs] : *b.negatives) {
          t.check(!test[u].empty(), where + ": negatives for a user without test items");
          std::set<Index> distinct(negs.begin(), negs.end());
          t.check(distinct.size() == negs.size(), where + ": duplicate negative");
          for (Index i : negs) t.check(i < ni && !want[u].count(i), where + ": negative is a known interaction");
          t.check(negs.size() == std::min(*n_neg, ni - want[u].size()), where + ": wrong negative count");
        }
      }
    } catch (const std::exception& e) {
      t.fail(fmt::format("{} protocol {}: {}", where, protocol, e.what()));
    }
  }
  return t.verdict(cases);
}

Verdict negatives_pass_own_audit(std::uint64_t seed, std::size_t cases) {
  SeededRng rng(seed);
  Tally t;
  for (std::size_t c = 0; c < cases; ++c) {
    const auto m = random_matrix(rng, 5 + rng.below(30), 400, rng.uniform(0.02, 0.2));
    const std::size_t n = 1 + rng.below(100);
    auto b = sample_negatives(split_leave_last_out(m, rng.below(2) == 0), n, SeededRng(rng.next_u64()));
    const auto report = audit_negatives(b, n);
    t.check(report.defects() == 0, fmt::format("case {}: {} defects", c, report.defects()));
  }
  return t.verdict(cases);
}

}  // namespace props

namespace props {

nlohmann::json synthetic_experiment(const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  SeededRng rng(seed);
  const auto m = random_matrix(rng, 80, 60, 0.12);
  {
    std::ofstream out(dir / "ratings.tsv");
    for (const auto& e : m.interactions()) {
      out << "u" << e.user << '\t' << "i" << e.item << '\t' << e.weight << '\t' << *e.timestamp << '\n';
    }
  }
  return {
      {"name", "synthetic"},
      {"seed", seed},
      {"output_dir", (dir / "out").string()},
      {"dataset",
       {{"path", (dir / "ratings.tsv").string()},
        {"schema", {{"delimiter", "\t"}, {"user", 0}, {"item", 1}, {"weight", 2}, {"timestamp", 3}}},
        {"preprocessing", {{{"step", "k_core"}, {"min_user", 3}, {"min_item", 1}}}}}},
      {"split", {{"protocol", "leave_last_out"}, {"with_validation", true}}},
      {"negatives", 20},
      {"algorithms",
       {{{"id", "toppop"}, {"tune", false}},
        {{"id", "itemknn_cf"}, {"similarity", "cosine"}},
        {{"id", "userknn_cf"}, {"similarity", "jaccard"}},
        {{"id", "rp3beta"}},
        {{"id", "puresvd"}, {"tune", false}, {"params", {{"num_factors", 8}}}},
        {{"id", "ials"}},
        {{"id", "ease"}}}},
      {"tuning",
       {{"budget", 4},
        {"n_random_init", 2},
        {"target", {{"metric", "ndcg"}, {"cutoff", 5}}},
        {"early_stopping", {{"epochs_per_step", 2}, {"patience_steps", 2}, {"epochs_max", 8}}}}},
      {"evaluation", {{"protocol", "sampled"}, {"metrics", {"hit_rate", "ndcg"}}, {"cutoffs", {5, 10}}}},
  };
}

}  // namespace props
