#include <catch_amalgamated.hpp>

#include "iprop/error.hpp"
#include "iprop/metrics.hpp"
#include "support/metrics_oracle.hpp"

using namespace iprop;
using namespace iprop::testing;

namespace {

std::vector<Prediction> preds(const std::vector<std::optional<std::string>>& labels) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({i, labels[i], ""});
  return out;
}

std::vector<GoldLabel> gold(const std::vector<std::string>& labels) {
  std::vector<GoldLabel> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.emplace_back(i, labels[i]);
  return out;
}

}  // namespace

TEST_CASE("hand-computed case is exactly two thirds") {
  const LabelSet ls({"A", "B"});
  CHECK(weighted_f1(preds({"A", "B", "B"}), gold({"A", "A", "B"}), ls) == 2.0 / 3.0);
  const auto m = confusion(preds({"A", "B", "B"}), gold({"A", "A", "B"}), ls);
  CHECK(m.weighted_f1() == 2.0 / 3.0);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(0, 1) == 1);
  CHECK(m.at(1, 1) == 1);
}

TEST_CASE("edge cases") {
  const LabelSet ls({"A", "B"});
  CHECK(weighted_f1(preds({"A", "B"}), gold({"A", "B"}), ls) == 1.0);
  CHECK(weighted_f1(preds({std::nullopt, std::nullopt}), gold({"A", "B"}), ls) == 0.0);
  CHECK(weighted_f1(preds({"B", "A"}), gold({"A", "B"}), ls) == 0.0);

  // UNKNOWN counts as a miss, never as a false positive of a real label.
  const auto m = confusion(preds({std::nullopt, "A"}), gold({"A", "A"}), ls);
  CHECK(m.at(0, m.unknown_column()) == 1);
  CHECK(m.precision(0) == 1.0);
  CHECK(m.recall(0) == 0.5);
  // Label B has no support and no predictions: 0/0 terms are 0.
  CHECK(m.f1(1) == 0.0);
}

TEST_CASE("alignment errors") {
  const LabelSet ls({"A", "B"});
  std::vector<Prediction> p{{0, "A", ""}, {2, "B", ""}};
  try {
    weighted_f1(p, gold({"A", "B"}), ls);
    FAIL("expected IdMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IdMismatch);
  }
  std::vector<Prediction> dup{{0, "A", ""}, {0, "B", ""}};
  CHECK_THROWS_AS(weighted_f1(dup, gold({"A", "B"}), ls), Error);
  try {
    weighted_f1({}, {}, ls);
    FAIL("expected EmptyEvaluation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyEvaluation);
  }
  // Order of predictions does not matter.
  std::vector<Prediction> shuffled{{1, "B", ""}, {0, "A", ""}};
  CHECK(weighted_f1(shuffled, gold({"A", "B"}), ls) == 1.0);
}

TEST_CASE("matches the brute-force oracle on random cases") {
  Rng rng(2024);
  for (int round = 0; round < 2000; ++round) {
    const auto c = random_metrics_case(rng);
    const auto expected = brute_force_weighted_f1(c);
    const auto direct = weighted_f1(predictions_of(c), gold_of(c), c.labels);
    const auto via_matrix = confusion(predictions_of(c), gold_of(c), c.labels).weighted_f1();
    REQUIRE(std::abs(direct - expected) <= 1e-12);
    REQUIRE(std::abs(via_matrix - expected) <= 1e-12);
    REQUIRE((direct >= 0.0 && direct <= 1.0));
  }
}

TEST_CASE("permutation invariance") {
  Rng rng(7);
  for (int round = 0; round < 200; ++round) {
    auto c = random_metrics_case(rng);
    auto p = predictions_of(c);
    const auto before = weighted_f1(p, gold_of(c), c.labels);
    rng.shuffle(std::span(p));
    REQUIRE(weighted_f1(p, gold_of(c), c.labels) == before);
  }
}
