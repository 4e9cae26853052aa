#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "kgalign/side_features.hpp"
#include "kgalign/synth.hpp"

using namespace kgalign;

namespace {

SynthConfig config(std::size_t n, double names, double structure, double unmatchable) {
  SynthConfig cfg;
  cfg.n_entities = n;
  cfg.name_noise = names;
  cfg.structure_noise = structure;
  cfg.unmatchable_fraction = unmatchable;
  return cfg;
}

}  // namespace

TEST(Generate, NoNoiseGivesIsomorphicCopy) {
  const auto d = generate(config(300, 0, 0, 0));
  EXPECT_EQ(d.source.names(), d.target.names());
  ASSERT_EQ(d.source.triples().size(), d.target.triples().size());
  for (std::size_t i = 0; i < d.source.triples().size(); ++i) {
    EXPECT_EQ(d.source.triples()[i].head, d.target.triples()[i].head);
    EXPECT_EQ(d.source.triples()[i].tail, d.target.triples()[i].tail);
  }
  EXPECT_EQ(d.gold.size(), 300u);
  for (const auto& [s, t] : d.gold) EXPECT_EQ(s, t);
  EXPECT_TRUE(d.unmatchable_sources.empty());
}

TEST(Generate, UnmatchableCount) {
  const auto d = generate(config(1000, 0.05, 0.1, 0.1));
  EXPECT_EQ(d.gold.size(), 900u);
  EXPECT_EQ(d.unmatchable_sources.size(), 100u);
  EXPECT_EQ(d.target.size(), 900u);
  for (auto u : d.unmatchable_sources) EXPECT_FALSE(d.gold.has_source(u));
}

TEST(Generate, NamesAreUniqueAndDegreeIsNearTarget) {
  const auto d = generate(config(1000, 0, 0, 0));
  std::set<std::string> names(d.source.names().begin(), d.source.names().end());
  EXPECT_EQ(names.size(), 1000u);
  const double avg = 2.0 * static_cast<double>(d.source.triples().size()) / 1000.0;
  EXPECT_NEAR(avg, 6.0, 0.5);
}

TEST(Generate, NoisyGoldNamesAreCloserThanRandomPairs) {
  const auto d = generate(config(1000, 0.05, 0.1, 0.1));
  const auto m = string_distance(d.source.names(), d.target.names());
  double gold_sum = 0;
  for (const auto& [s, t] : d.gold) gold_sum += m(s.index(), t.index());
  double all_sum = 0;
  for (float v : m.values()) all_sum += v;
  const double gold_mean = gold_sum / static_cast<double>(d.gold.size());
  const double random_mean = all_sum / static_cast<double>(m.values().size());
  EXPECT_LT(gold_mean, random_mean);
  EXPECT_GT(gold_mean, 0.0);
}

TEST(Generate, DeterministicInSeed) {
  const auto cfg = config(400, 0.1, 0.2, 0.1);
  const auto a = generate(cfg), b = generate(cfg);
  EXPECT_EQ(a.source, b.source);
  EXPECT_EQ(a.target, b.target);
  EXPECT_EQ(a.gold, b.gold);
  auto other = cfg;
  other.seed += 1;
  EXPECT_NE(generate(other).source, a.source);
}

TEST(Generate, RejectsInvalidConfig) {
  EXPECT_THROW(generate(config(100, 1.5, 0, 0)), InvalidArgument);
  EXPECT_THROW(generate(config(100, 0, 0, 1.0)), InvalidArgument);
}

TEST(WriteDataset, FilesReloadToTheSameGraphs) {
  const auto d = generate(config(120, 0.1, 0.1, 0.1));
  const auto vectors = synthetic_word_vectors(d.vocabulary, 8, 3);
  const auto dir = std::filesystem::temp_directory_path() / "kgalign_synth_test";
  std::filesystem::remove_all(dir);
  write_dataset(d, vectors, d.vocabulary, dir);

  std::ifstream t1(dir / "triples_1"), e1(dir / "ent_ids_1"), t2(dir / "triples_2"), e2(dir / "ent_ids_2");
  const auto g1 = load_kg(t1, e1);
  const auto g2 = load_kg(t2, e2);
  EXPECT_EQ(g1, d.source);
  EXPECT_EQ(g2, d.target);
  std::ifstream gold(dir / "ref_ent_ids");
  EXPECT_EQ(load_alignment(gold, g1, g2), d.gold);
  std::ifstream vec(dir / "vectors.txt");
  const auto table = load_word_vectors(vec);
  EXPECT_EQ(table.size(), d.vocabulary.size());
  EXPECT_EQ(table.dim(), 8u);
  std::filesystem::remove_all(dir);
}

TEST(SyntheticVectors, UnitNorm) {
  const auto v = synthetic_word_vectors({"ab", "cd", "ef"}, 16, 1);
  for (const char* tok : {"ab", "cd", "ef"}) {
    const float* p = v.find(tok);
    ASSERT_NE(p, nullptr);
    double sq = 0;
    for (std::size_t k = 0; k < 16; ++k) sq += static_cast<double>(p[k]) * p[k];
    EXPECT_NEAR(sq, 1.0, 1e-5);
  }
}
