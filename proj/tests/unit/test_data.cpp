#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "properties.hpp"
#include "recbase/data.hpp"

using namespace recbase;
namespace fs = std::filesystem;

namespace {

InteractionMatrix one_user(std::size_t n_items, std::size_t owned, bool timestamps = false) {
  std::vector<Interaction> e;
  for (Index i = 0; i < owned; ++i) {
    e.push_back({0, i, 1.0, timestamps ? std::optional<std::int64_t>(i) : std::nullopt});
  }
  return InteractionMatrix::from_interactions(1, n_items, std::move(e));
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("recbase_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("interaction matrix rejects bad input") {
  CHECK_THROWS_AS(InteractionMatrix::from_interactions(1, 1, {{0, 1, 1.0}}), Error);
  CHECK_THROWS_AS(InteractionMatrix::from_interactions(1, 2, {{0, 0, 0.0}}), Error);
  CHECK_THROWS_AS(InteractionMatrix::from_interactions(1, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), Error);
  CHECK_THROWS_AS(InteractionMatrix::from_interactions(1, 2, {{0, 0, 1.0, 5}, {0, 1, 1.0}}), Error);
  const auto kept = InteractionMatrix::from_interactions(1, 2, {{0, 0, 1.0, 9}, {0, 0, 2.0, 4}},
                                                         DuplicatePolicy::keep_earliest);
  REQUIRE(kept.nnz() == 1);
  CHECK(kept.interactions()[0].weight == 2.0);
}

TEST_CASE("binarize keeps weights above the threshold") {
  const auto m = InteractionMatrix::from_interactions(1, 4, {{0, 0, 1.0}, {0, 1, 3.0}, {0, 2, 4.0}, {0, 3, 5.0}});
  const auto b = binarize(m, 3.0);
  REQUIRE(b.nnz() == 2);
  CHECK(b.contains(0, 2));
  CHECK(b.contains(0, 3));
  for (const auto& e : b.interactions()) CHECK(e.weight == 1.0);
}

TEST_CASE("k-core filter") {
  // user 0 has 3 items, user 1 has 1; item 2 only used by user 1.
  const auto m = InteractionMatrix::from_interactions(2, 3, {{0, 0}, {0, 1}, {0, 2}, {1, 2}});
  const auto single = k_core_filter(m, 2, 1);
  CHECK(single.matrix.n_users() == 1);
  CHECK(single.kept_users == std::vector<Index>{0});
  CHECK(single.matrix.nnz() == 3);

  // Removing a user can push an item below the limit, which the iterative
  // variant follows through.
  const auto chain = InteractionMatrix::from_interactions(3, 3, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}, {2, 0}});
  const auto once = k_core_filter(chain, 2, 2, false);
  const auto fixed = k_core_filter(chain, 2, 2, true);
  CHECK(fixed.matrix.n_items() == 2);
  CHECK(fixed.matrix.n_users() == 2);
  for (Index u = 0; u < fixed.matrix.n_users(); ++u) CHECK(fixed.matrix.user_degree(u) >= 2);
  CHECK(once.matrix.nnz() >= fixed.matrix.nnz());
}

TEST_CASE("parser reports the offending line") {
  ColumnSchema schema;
  schema.weight = 2;
  schema.timestamp = 3;
  const auto d = parse_interactions("a\tx\t5\t10\nb\tx\t3\t11\na\ty\t4\t9\n", schema);
  CHECK(d.matrix.n_users() == 2);
  CHECK(d.matrix.n_items() == 2);
  CHECK(d.users.raw(0) == "a");
  try {
    parse_interactions("a\tx\t5\t10\nb\tx\tnope\t11\n", schema, "ratings.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("ratings.tsv") != std::string::npos);
  }
  // Repeated pairs collapse to the earliest timestamp.
  const auto dup = parse_interactions("a\tx\t5\t10\na\tx\t1\t3\n", schema);
  REQUIRE(dup.matrix.nnz() == 1);
  CHECK(dup.matrix.interactions()[0].weight == 1.0);
}

TEST_CASE("leave-last-out takes the latest entry, larger item on ties") {
  const auto m = InteractionMatrix::from_interactions(1, 4, {{0, 0, 1.0, 5}, {0, 1, 1.0, 9}, {0, 3, 1.0, 9},
                                                             {0, 2, 1.0, 1}});
  const auto b = split_leave_last_out(m);
  CHECK(b.test.contains(0, 3));
  CHECK(b.test.nnz() == 1);
  const auto v = split_leave_last_out(m, true);
  CHECK(v.test.contains(0, 3));
  CHECK(v.validation->contains(0, 1));
  CHECK(v.train.nnz() == 2);
  // A user with a single interaction goes to test.
  const auto lone = split_leave_last_out(one_user(3, 1, true));
  CHECK(lone.test.nnz() == 1);
  CHECK(lone.train.nnz() == 0);
}

TEST_CASE("random holdout counts") {
  const auto ten = split_random_holdout(one_user(10, 10), 0.2, SeededRng(1));
  CHECK(ten.test.nnz() == 2);
  CHECK(ten.train.nnz() == 8);
  const auto lone = split_random_holdout(one_user(5, 1), 0.2, SeededRng(1));
  CHECK(lone.test.nnz() == 0);
  CHECK(lone.train.nnz() == 1);
  CHECK(split_random_holdout(one_user(10, 10), 0.2, SeededRng(7)).test ==
        split_random_holdout(one_user(10, 10), 0.2, SeededRng(7)).test);
}

TEST_CASE("user holdout keeps a profile and a truth part") {
  std::vector<Interaction> e;
  for (Index u = 0; u < 4; ++u) {
    for (Index i = 0; i < 10; ++i) e.push_back({u, i});
  }
  const auto m = InteractionMatrix::from_interactions(4, 10, std::move(e));
  const auto b = split_user_holdout(m, 1, 1, 0.8, SeededRng(3));
  REQUIRE(b.test_users.size() == 1);
  const Index t = b.test_users[0];
  CHECK(b.fold_in->user_degree(t) == 8);
  CHECK(b.test.user_degree(t) == 2);
  CHECK(b.train.user_degree(t) == 0);
  CHECK(b.validation->user_degree(b.validation_users[0]) == 2);
  CHECK(b.train.nnz() == 20);
  CHECK_THROWS_AS(split_user_holdout(m, 2, 2, 0.8, SeededRng(3)), ConfigError);
}

TEST_CASE("fixed per user leaves P train items") {
  const auto b = split_fixed_per_user(one_user(10, 6), 1, SeededRng(2));
  CHECK(b.train.nnz() == 1);
  CHECK(b.test.nnz() == 5);
  const auto small = split_fixed_per_user(one_user(10, 1), 1, SeededRng(2));
  CHECK(small.train.nnz() == 1);
  CHECK(small.test.nnz() == 0);
}

TEST_CASE("leave one out random") {
  const auto b = split_leave_one_out_random(one_user(10, 6), SeededRng(4));
  CHECK(b.test.nnz() == 1);
  CHECK(b.train.nnz() == 5);
}

TEST_CASE("negative sampling") {
  SUBCASE("exactly the unseen items") {
    auto b = split_leave_last_out(one_user(101, 1, true));
    b = sample_negatives(std::move(b), 100, SeededRng(5));
    const auto& negs = b.negatives->at(0);
    REQUIRE(negs.size() == 100);
    std::set<Index> distinct(negs.begin(), negs.end());
    CHECK(distinct.size() == 100);
    CHECK(!distinct.count(0));
    CHECK(b.provenance.warnings.empty());
  }
  SUBCASE("shortfall is recorded") {
    auto b = sample_negatives(split_leave_last_out(one_user(50, 10, true)), 100, SeededRng(5));
    CHECK(b.negatives->at(0).size() == 40);
    CHECK(b.provenance.warnings.size() == 1);
  }
  SUBCASE("validation items are excluded too") {
    auto b = split_leave_last_out(one_user(12, 10, true), true);
    b = sample_negatives(std::move(b), 5, SeededRng(6));
    for (Index i : b.negatives->at(0)) CHECK(i >= 10);
    CHECK_NOTHROW(b.validate());
  }
}

TEST_CASE("bundle files round trip") {
  SeededRng rng(8);
  const auto m = props::random_matrix(rng, 12, 9, 0.4);
  auto b = sample_negatives(split_leave_last_out(m, true), 3, SeededRng(9));
  const auto dir = scratch("bundle");
  write_bundle(dir, b);
  const auto back = read_bundle(dir);
  CHECK(back.train == b.train);
  CHECK(back.test == b.test);
  CHECK(*back.validation == *b.validation);
  CHECK(*back.negatives == *b.negatives);
  fs::remove_all(dir);
}

TEST_CASE("bundle validation catches overlaps") {
  auto b = split_random_holdout(one_user(10, 10), 0.3, SeededRng(1));
  b.negatives = NegativeSets{{0, {b.train.user_row(0).indices[0]}}};
  CHECK_THROWS_AS(b.validate(), Error);
}

TEST_CASE("dataset digest") {
  const auto a = InteractionMatrix::from_interactions(2, 2, {{0, 1, 2.0}, {1, 0, 1.0}});
  const auto b = InteractionMatrix::from_interactions(2, 2, {{1, 0, 1.0}, {0, 1, 2.0}});
  const auto c = InteractionMatrix::from_interactions(2, 2, {{0, 1, 3.0}, {1, 0, 1.0}});
  CHECK(dataset_digest(a) == dataset_digest(b));
  CHECK(dataset_digest(a) != dataset_digest(c));
  CHECK(dataset_digest(a).size() == 64);
}

TEST_CASE("split invariants fuzz") {
  const auto v = props::split_invariants(20260101, 300);
  INFO(v.detail);
  CHECK(v.ok);
}
