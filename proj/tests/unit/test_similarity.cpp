#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "properties.hpp"
#include "recbase/models.hpp"
#include "recbase/similarity.hpp"

using namespace recbase;

namespace {

// Two item columns [1,1,0] and [1,0,1] over three users.
InteractionMatrix two_columns() {
  return InteractionMatrix::from_interactions(3, 2, {{0, 0}, {0, 1}, {1, 0}, {2, 1}});
}

double item_pair(Measure measure, double shrink = 0.0) {
  SimilarityConfig cfg;
  cfg.measure = measure;
  cfg.shrink = shrink;
  cfg.tversky_alpha = 0.5;
  cfg.tversky_beta = 0.5;
  return compute_similarity(two_columns(), Axis::items, cfg).at(0, 1);
}

}  // namespace

TEST_CASE("closed-form pair values") {
  CHECK(item_pair(Measure::cosine) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(item_pair(Measure::jaccard) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(item_pair(Measure::dice) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(item_pair(Measure::tversky) == doctest::Approx(item_pair(Measure::dice)).epsilon(1e-12));
  CHECK(item_pair(Measure::asymmetric_cosine) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(item_pair(Measure::cosine, 2.0) == doctest::Approx(1.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("similarity is symmetric for symmetric measures and zero on the diagonal") {
  SeededRng rng(3);
  const auto m = props::random_matrix(rng, 20, 12, 0.3, false);
  for (Measure measure : {Measure::cosine, Measure::jaccard, Measure::dice}) {
    SimilarityConfig cfg;
    cfg.measure = measure;
    cfg.top_k = 100;
    const auto s = compute_similarity(m, Axis::items, cfg);
    for (std::size_t i = 0; i < s.n(); ++i) {
      CHECK(s.at(i, i) == 0.0);
      for (std::size_t j = 0; j < s.n(); ++j) CHECK(s.at(i, j) == doctest::Approx(s.at(j, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("top-k keeps the lower index on ties and pruning is idempotent") {
  std::vector<std::pair<Index, double>> row{{0, 0.9}, {1, 0.5}, {2, 0.5}, {3, 0.1}};
  select_top_k(row, 2);
  REQUIRE(row.size() == 2);
  CHECK(row[0] == std::pair<Index, double>{0, 0.9});
  CHECK(row[1] == std::pair<Index, double>{1, 0.5});

  SeededRng rng(4);
  const auto m = props::random_matrix(rng, 30, 15, 0.3, false);
  SimilarityConfig cfg;
  cfg.top_k = 4;
  const auto s = compute_similarity(m, Axis::items, cfg);
  CHECK(top_k_prune(s, 4) == s);
  CHECK(s.max_row_size() <= 4);
  cfg.top_k = 15;
  CHECK(top_k_prune(compute_similarity(m, Axis::items, cfg), 4) == s);
}

TEST_CASE("tf-idf zeroes a term present in every document") {
  const auto docs = CsrMatrix::from_dense((Eigen::MatrixXd(3, 2) << 1, 1, 1, 0, 2, 1).finished());
  const auto w = apply_feature_weighting(docs, FeatureWeighting::tfidf);
  for (const auto& t : w.triplets()) CHECK(t.col != 0);
  CHECK(w.at(0, 1) == doctest::Approx(std::log(1.5)));
}

TEST_CASE("bm25 on a 3x3 toy") {
  Eigen::MatrixXd d(3, 3);
  d << 2, 0, 1, 0, 3, 1, 1, 1, 0;
  const auto w = apply_feature_weighting(CsrMatrix::from_dense(d), FeatureWeighting::bm25);
  const auto expected = oracle::weighting(d, FeatureWeighting::bm25);
  CHECK((oracle::dense(w) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("feature weighting is rejected with set measures") {
  SimilarityConfig cfg;
  cfg.measure = Measure::jaccard;
  cfg.feature_weighting = FeatureWeighting::tfidf;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.measure = Measure::cosine;
  cfg.top_k = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("unnormalized similarity is the raw overlap") {
  SimilarityConfig cfg;
  cfg.normalize = false;
  cfg.shrink = 50.0;
  CHECK(compute_similarity(two_columns(), Axis::items, cfg).at(0, 1) == 1.0);
  cfg.measure = Measure::dice;
  CHECK(compute_similarity(two_columns(), Axis::items, cfg).at(0, 1) == 2.0);
}

TEST_CASE("similarity index query matches the batch kernel") {
  SeededRng rng(9);
  const auto m = props::random_matrix(rng, 25, 10, 0.3, false);
  SimilarityConfig cfg;
  cfg.measure = Measure::asymmetric_cosine;
  cfg.asymmetric_alpha = 0.3;
  cfg.shrink = 1.0;
  cfg.top_k = 5;
  cfg.feature_weighting = FeatureWeighting::bm25;
  const auto batch = compute_similarity(m, Axis::users, cfg);
  const SimilarityIndex index(m.by_user(), cfg);
  for (Index u = 0; u < m.n_users(); ++u) {
    const auto q = index.query(m.user_row(u), u);
    const auto row = batch.row(u);
    REQUIRE(q.size() == row.size());
    for (std::size_t p = 0; p < q.size(); ++p) {
      CHECK(q[p].first == row.indices[p]);
      CHECK(q[p].second == doctest::Approx(row.values[p]).epsilon(1e-12));
    }
  }
}

TEST_CASE("hybrid with zero content weight reproduces the collaborative input") {
  const auto m = two_columns();
  ContentMatrix c{CsrMatrix::from_dense((Eigen::MatrixXd(2, 3) << 1, 0, 1, 0, 1, 1).finished())};
  CHECK(concat_hybrid(m, c, 0.0, Axis::items).nnz() == m.nnz());
  const auto h = concat_hybrid(m, c, 0.5, Axis::items);
  CHECK(h.n_users() == 6);
  CHECK(h.n_items() == 2);
  CHECK(h.contains(3, 0));
  CHECK(h.interactions().back().weight == 0.5);

  SimilarityConfig cfg;
  const auto cf = fit_knn(m, Axis::items, cfg);
  const auto hybrid = fit_knn_cfcbf(m, c, Axis::items, cfg, 0.0);
  CHECK(std::get<ItemWeightsArtifact>(cf.artifact()).weights ==
        std::get<ItemWeightsArtifact>(hybrid.artifact()).weights);
}

TEST_CASE("similarity fuzz against the dense oracle") {
  const auto v = props::similarity_matches_dense(77, 200, 1e-10);
  INFO(v.detail);
  CHECK(v.ok);
}
