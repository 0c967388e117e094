#include "factalign/calibration.hpp"

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "planted.hpp"

using namespace factalign;

namespace {

// Deviation of one gold case at threshold t, computed from the brute-force
// assignment oracle and the F1 oracle.
double oracle_deviation(const GoldCase& g, const Embedder& embedder, double t) {
  const auto ea = embedder.embed(g.a.fact_texts());
  const auto eb = embedder.embed(g.b.fact_texts());
  std::vector<double> values;
  for (const auto& u : ea) {
    for (const auto& v : eb) values.push_back(cosine_similarity(u, v));
  }
  const auto best = oracle::brute_force_assignment(ea.size(), eb.size(), values);
  std::vector<oracle::Pair> predicted;
  for (const auto& [i, j] : best.pairs) {
    if (values[i * eb.size() + j] >= t) predicted.emplace_back(i, j);
  }
  return oracle::one_minus_f1(predicted, g.gold.pairs);
}

GoldCase single_case(std::vector<std::string> a, std::vector<std::string> b, std::vector<IndexPair> pairs) {
  GoldCase g{GoldMatching{"g", "a", "b", std::move(pairs)}, fixtures::annotation("a", std::move(a)),
             fixtures::annotation("b", std::move(b))};
  return g;
}

}  // namespace

TEST(PairDeviation, HandComputedValues) {
  const std::vector<IndexPair> gold = {{0, 0}, {1, 1}};
  EXPECT_EQ(pair_deviation(gold, gold), 0.0);
  EXPECT_EQ(pair_deviation(std::vector<IndexPair>{{0, 1}}, gold), 1.0);
  EXPECT_NEAR(pair_deviation(std::vector<IndexPair>{{0, 0}}, gold), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(pair_deviation({}, {}), 0.0);
  EXPECT_EQ(pair_deviation({}, gold), 1.0);
}

TEST(PairDeviation, AgreesWithF1Oracle) {
  fixtures::Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<IndexPair> p, g;
    for (std::size_t k = fixtures::uniform(rng, 0, 4); k > 0; --k) {
      p.emplace_back(fixtures::uniform(rng, 0, 3), fixtures::uniform(rng, 0, 3));
    }
    for (std::size_t k = fixtures::uniform(rng, 0, 4); k > 0; --k) {
      g.emplace_back(fixtures::uniform(rng, 0, 3), fixtures::uniform(rng, 0, 3));
    }
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    ASSERT_NEAR(pair_deviation(p, g), oracle::one_minus_f1(p, g), 1e-12);
  }
}

TEST(ThresholdGrid, ExactFractionsAndRagged) {
  const auto g = threshold_grid(0.01);
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g[31], 0.31);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(threshold_grid(0.05).size(), 21u);
  const auto ragged = threshold_grid(0.03);
  EXPECT_EQ(ragged.back(), 1.0);
  EXPECT_NEAR(ragged[ragged.size() - 2], 0.99, 1e-12);
  EXPECT_ERROR_KIND(threshold_grid(0.0), ErrorKind::InvalidArgument);
  EXPECT_ERROR_KIND(threshold_grid(0.2), ErrorKind::InvalidArgument);
}

TEST(Calibrate, EmptyGoldSet) {
  FallbackEmbedder provider;
  Embedder embedder(provider);
  try {
    calibrate_threshold({}, embedder);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyGoldSet);
    EXPECT_STREQ(e.what(), "empty gold set");
  }
}

TEST(Calibrate, ConstantCurvePicksLowestThreshold) {
  FallbackEmbedder provider;
  Embedder embedder(provider);
  const std::vector<GoldCase> golds = {single_case({"pay the fee"}, {"pay the fee"}, {{0, 0}})};
  const auto r = calibrate_threshold(golds, embedder);
  EXPECT_EQ(r.best_threshold, 0.0);
  EXPECT_EQ(r.best_deviation, 0.0);
  EXPECT_EQ(calibrate_threshold(golds, embedder, 0.01, ThresholdTieBreak::Highest).best_threshold, 1.0);
}

TEST(Calibrate, InvalidGoldIsRejected) {
  FallbackEmbedder provider;
  Embedder embedder(provider);
  const std::vector<GoldCase> out_of_range = {single_case({"a b"}, {"c d"}, {{0, 3}})};
  EXPECT_ERROR_KIND(calibrate_threshold(out_of_range, embedder), ErrorKind::InvalidArgument);
  const std::vector<GoldCase> not_injective = {single_case({"a b", "e f"}, {"c d"}, {{0, 0}, {1, 0}})};
  EXPECT_ERROR_KIND(calibrate_threshold(not_injective, embedder), ErrorKind::InvalidArgument);
}

TEST(Calibrate, PlantedSeparationIsRecovered) {
  fixtures::Rng rng(314);
  auto corpus = planted::build(rng, 12);
  Embedder embedder(*corpus.provider);

  // The boundary values are attained exactly by the planted vectors.
  const auto& c0 = corpus.golds[0];
  const auto r0 = match_annotations(c0.a, c0.b, embedder, 0.0);
  bool saw_boundary = false;
  for (double v : r0.matrix.values()) saw_boundary |= v == 0.3;
  ASSERT_TRUE(saw_boundary);

  const auto fine = calibrate_threshold(corpus.golds, embedder, 0.01);
  EXPECT_EQ(fine.best_threshold, 0.31);
  EXPECT_EQ(fine.best_deviation, 0.0);
  for (const auto& p : fine.objective_curve) {
    const bool inside = p.threshold > 0.3 && p.threshold <= 0.9;
    if (inside) EXPECT_EQ(p.mean_deviation, 0.0) << p.threshold;
    if (p.threshold <= 0.3) EXPECT_GT(p.mean_deviation, 0.0) << p.threshold;
  }
  const auto coarse = calibrate_threshold(corpus.golds, embedder, 0.05);
  EXPECT_EQ(coarse.best_threshold, 0.35);
  EXPECT_EQ(coarse.best_deviation, fine.best_deviation);
  EXPECT_EQ(calibrate_threshold(corpus.golds, embedder, 0.01, ThresholdTieBreak::Highest).best_threshold, 0.9);
}

TEST(Calibrate, CurveMatchesBruteForceOracle) {
  fixtures::Rng rng(2718);
  auto corpus = planted::build(rng, 6);
  Embedder embedder(*corpus.provider);
  const auto report = calibrate_threshold(corpus.golds, embedder, 0.05);
  for (const auto& p : report.objective_curve) {
    double sum = 0.0;
    for (const auto& g : corpus.golds) sum += oracle_deviation(g, embedder, p.threshold);
    EXPECT_NEAR(p.mean_deviation, sum / static_cast<double>(corpus.golds.size()), 1e-12) << p.threshold;
  }
}

TEST(EvaluateProvider, IdenticalEmbeddingsFollowTieBrokenAssignment) {
  TableProvider flat("flat", 2);
  const std::vector<std::string> a = {"a0", "a1", "a2"};
  const std::vector<std::string> b = {"b0", "b1"};
  for (const auto& t : a) flat.set(t, {1.0, 1.0});
  for (const auto& t : b) flat.set(t, {1.0, 1.0});
  Embedder embedder(flat);
  const std::vector<GoldCase> golds = {single_case(a, b, {{0, 1}, {2, 0}})};
  // Every assignment ties; the lexicographic rule picks {(0,0),(1,1)}.
  const double expected = oracle_deviation(golds[0], embedder, 0.0);
  EXPECT_NEAR(evaluate_provider(golds, embedder), expected, 1e-12);
  EXPECT_EQ(expected, 1.0);
}

TEST(EvaluateProvider, PerfectProviderScoresZeroAndIsStable) {
  TableProvider onehot("onehot", 4);
  onehot.set("a0", {1, 0, 0, 0});
  onehot.set("a1", {0, 1, 0, 0});
  onehot.set("b0", {0, 1, 0, 0});
  onehot.set("b1", {1, 0, 0, 0});
  Embedder embedder(onehot);
  const std::vector<GoldCase> golds = {single_case({"a0", "a1"}, {"b0", "b1"}, {{0, 1}, {1, 0}})};
  EXPECT_EQ(evaluate_provider(golds, embedder), 0.0);

  FallbackEmbedder fallback;
  Embedder other(fallback);
  const auto first = evaluate_provider(golds, other);
  EXPECT_EQ(evaluate_provider(golds, other), first);
}

TEST(Calibrate, ReportJson) {
  FallbackEmbedder provider;
  Embedder embedder(provider);
  const std::vector<GoldCase> golds = {single_case({"pay the fee"}, {"pay the fee"}, {{0, 0}})};
  const nlohmann::json j = calibrate_threshold(golds, embedder, 0.1);
  EXPECT_EQ(j["gold_count"], 1);
  EXPECT_EQ(j["objective_curve"].size(), 11u);
  EXPECT_EQ(j["objective_curve"][3]["threshold"], 0.3);
}
