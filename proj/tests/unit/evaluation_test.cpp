#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "kgalign/evaluation.hpp"

using namespace kgalign;

namespace {

KnowledgeGraph unnamed(std::size_t n) { return KnowledgeGraph(std::vector<std::string>(n), {}); }

AlignmentSet identity(std::size_t n) {
  AlignmentSet s;
  for (std::size_t i = 0; i < n; ++i) s.insert(EntityId(i), EntityId(i));
  return s;
}

// A split whose test side is sources 0..gold-1 plus `extra` unmatchable sources.
OpenWorldSplit manual_split(std::size_t gold, std::size_t extra) {
  OpenWorldSplit split;
  split.test_sources = ActiveSet(gold + extra);
  split.test_targets = ActiveSet(gold);
  split.gold_test = identity(gold);
  for (std::size_t i = gold; i < gold + extra; ++i) split.unmatchable_sources.emplace_back(i);
  return split;
}

}  // namespace

TEST(BuildSplit, BenchmarkShapedCounts) {
  const auto g1 = unnamed(19388), g2 = unnamed(19572);
  const auto split = build_split(g1, g2, identity(15000), 0.3, 2021);
  EXPECT_EQ(split.train_pairs.size(), 4500u);
  EXPECT_EQ(split.test_sources.count(), 14888u);
  EXPECT_EQ(split.test_targets.count(), 10500u);
  EXPECT_EQ(split.gold_test.size(), 10500u);
  EXPECT_EQ(split.unmatchable_sources.size(), 4388u);
}

TEST(BuildSplit, ZeroTrainFraction) {
  const auto split = build_split(unnamed(10), unnamed(8), identity(6), 0.0);
  EXPECT_EQ(split.test_sources.count(), 10u);
  EXPECT_EQ(split.test_targets.count(), 6u);
  EXPECT_TRUE(split.train_pairs.empty());
}

TEST(BuildSplit, SmallToy) {
  const auto split = build_split(unnamed(10), unnamed(6), identity(6), 0.5);
  EXPECT_EQ(split.train_pairs.size(), 3u);
  EXPECT_EQ(split.test_sources.count(), 7u);
  EXPECT_EQ(split.test_targets.count(), 3u);
}

TEST(BuildSplit, InvalidArguments) {
  EXPECT_THROW(build_split(unnamed(3), unnamed(3), identity(3), 1.0), InvalidArgument);
  EXPECT_THROW(build_split(unnamed(3), unnamed(3), AlignmentSet{}, 0.3), InvalidArgument);
}

TEST(BuildSplit, PartitionsSourcesAndIsDeterministic) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n1 = 5 + rng() % 60, n2 = 5 + rng() % 60;
    const std::size_t g = 1 + rng() % std::min(n1, n2);
    std::vector<std::size_t> src(n1), tgt(n2);
    for (std::size_t i = 0; i < n1; ++i) src[i] = i;
    for (std::size_t i = 0; i < n2; ++i) tgt[i] = i;
    std::shuffle(src.begin(), src.end(), rng);
    std::shuffle(tgt.begin(), tgt.end(), rng);
    AlignmentSet gold;
    for (std::size_t i = 0; i < g; ++i) gold.insert(EntityId(src[i]), EntityId(tgt[i]));
    const double frac = static_cast<double>(rng() % 10) / 10.0;
    const auto a = build_split(unnamed(n1), unnamed(n2), gold, frac, 99);
    const auto b = build_split(unnamed(n1), unnamed(n2), gold, frac, 99);
    ASSERT_EQ(a.train_pairs, b.train_pairs);

    for (std::size_t u = 0; u < n1; ++u) {
      const EntityId e(u);
      const bool train = a.train_pairs.has_source(e);
      const bool matchable = a.gold_test.has_source(e);
      const bool unmatchable = std::find(a.unmatchable_sources.begin(), a.unmatchable_sources.end(), e) !=
                               a.unmatchable_sources.end();
      ASSERT_EQ(train + matchable + unmatchable, 1) << "entity " << u;
      ASSERT_EQ(a.test_sources.contains(e), !train);
    }
    for (const auto& [s, t] : a.gold_test) ASSERT_TRUE(a.test_targets.contains(t));
    ASSERT_EQ(a.test_targets.count(), a.gold_test.size());
    ASSERT_EQ(a.train_pairs.size() + a.gold_test.size(), g);
  }
}

TEST(Score, FormulaExample) {
  const auto split = manual_split(16, 4);
  MatchResult r;
  for (std::size_t i = 0; i < 8; ++i) r.matches.insert(EntityId(i), EntityId(i));
  r.matches.insert(EntityId(16), EntityId(8));
  r.matches.insert(EntityId(9), EntityId(10));
  const auto rep = score(r, split);
  EXPECT_EQ(rep.found, 10u);
  EXPECT_EQ(rep.correct, 8u);
  EXPECT_EQ(rep.gold, 16u);
  EXPECT_DOUBLE_EQ(rep.precision, 0.8);
  EXPECT_DOUBLE_EQ(rep.recall, 0.5);
  EXPECT_NEAR(rep.f1, 0.6154, 1e-4);
  EXPECT_DOUBLE_EQ(rep.unmatchable_in_results, 0.1);
}

TEST(Score, PerfectAndEmpty) {
  const auto split = manual_split(5, 2);
  MatchResult perfect;
  perfect.matches = identity(5);
  const auto p = score(perfect, split);
  EXPECT_DOUBLE_EQ(p.precision, 1.0);
  EXPECT_DOUBLE_EQ(p.recall, 1.0);
  EXPECT_DOUBLE_EQ(p.f1, 1.0);
  const auto e = score(MatchResult{}, split);
  EXPECT_DOUBLE_EQ(e.precision, 0.0);
  EXPECT_DOUBLE_EQ(e.recall, 0.0);
  EXPECT_DOUBLE_EQ(e.f1, 0.0);
}

TEST(Score, OutOfSplitEntityRejected) {
  const auto split = manual_split(3, 0);
  MatchResult r;
  r.matches.insert(EntityId(7), EntityId(0));
  EXPECT_THROW(score(r, split), DataError);
}

TEST(Score, F1IdentityAndPermutationInvariance) {
  std::mt19937 rng(21);
  const auto split = manual_split(40, 15);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<EntityId, EntityId>> pairs;
    for (std::size_t u = 0; u < 55; ++u)
      if (rng() % 2) pairs.emplace_back(EntityId(u), EntityId(rng() % 40));
    RelaxedMatchResult r;
    r.matches = pairs;
    const auto a = score(r, split);
    std::shuffle(r.matches.begin(), r.matches.end(), rng);
    const auto b = score(r, split);
    ASSERT_EQ(a.correct, b.correct);
    ASSERT_DOUBLE_EQ(a.f1, b.f1);
    ASSERT_LE(a.correct, a.found);
    ASSERT_LE(a.correct, a.gold);
    const double direct = a.found + a.gold == 0 ? 0.0 : 2.0 * a.correct / static_cast<double>(a.found + a.gold);
    ASSERT_NEAR(a.f1, direct, 1e-12);
  }
}

TEST(AblationMode, NamesRoundTrip) {
  for (auto m : kAllAblationModes) EXPECT_EQ(parse_ablation_mode(to_string(m)), m);
  EXPECT_EQ(parse_ablation_mode("wo_prg"), AblationMode::kWithoutProgressive);
  EXPECT_EQ(parse_ablation_mode("u_th"), AblationMode::kNilThreshold);
  EXPECT_THROW(parse_ablation_mode("wo_everything"), InvalidArgument);
}

TEST(Report, TableAndCsvContainLabels) {
  EvalReport r;
  r.label = "full";
  r.precision = r.recall = r.f1 = 1.0;
  EXPECT_NE(format_table({r}).find("full"), std::string::npos);
  EXPECT_EQ(format_csv({r}).substr(0, 4), "mode");
  EXPECT_EQ(r.to_json().at("label"), "full");
}

TEST(ScorePredictions, RawIdsAgainstGold) {
  RawPredictions pred;
  pred.matches = {{100, 200}, {101, 250}, {105, 203}};
  pred.unmatched_sources = {102};
  const std::vector<std::pair<std::int64_t, std::int64_t>> gold{{100, 200}, {101, 201}, {102, 202}, {103, 203}};
  const auto r = score_predictions(pred, gold);
  EXPECT_EQ(r.found, 3u);
  EXPECT_EQ(r.correct, 1u);
  EXPECT_EQ(r.gold, 4u);
  EXPECT_DOUBLE_EQ(r.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.25);
  EXPECT_DOUBLE_EQ(r.unmatchable_in_results, 1.0 / 3.0);
  const std::vector<std::int64_t> unmatchable{101, 105};
  EXPECT_DOUBLE_EQ(score_predictions(pred, gold, &unmatchable).unmatchable_in_results, 2.0 / 3.0);
  pred.matches.push_back({100, 201});
  EXPECT_THROW(score_predictions(pred, gold), DataError);
}
