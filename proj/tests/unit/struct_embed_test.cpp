#include <gtest/gtest.h>

#include <Eigen/QR>
#include <cmath>
#include <random>
#include <sstream>

#include "gradcheck.hpp"
#include "kgalign/matcher.hpp"
#include "kgalign/struct_embed.hpp"
#include "oracles.hpp"

using namespace kgalign;

namespace {

KnowledgeGraph graph(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::string> names(n);
  std::vector<Triple> triples;
  for (auto [h, t] : edges) triples.push_back({EntityId(h), 0, EntityId(t)});
  return KnowledgeGraph(std::move(names), std::move(triples));
}

void expect_matches_oracle(const NormalizedAdjacency& adj, std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  const auto ref = oracle::normalized_adjacency(n, edges);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) EXPECT_NEAR(adj.value(r, c), ref[r][c], 1e-12) << r << "," << c;
}

GcnConfig small_config() {
  GcnConfig cfg;
  cfg.hidden_dim = 16;
  cfg.output_dim = 16;
  cfg.epochs = 50;
  return cfg;
}

}  // namespace

TEST(Adjacency, TwoNodes) {
  const auto adj = build_adjacency(graph(2, {{0, 1}}));
  EXPECT_DOUBLE_EQ(adj.value(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(adj.value(0, 0), 0.5);
  expect_matches_oracle(adj, 2, {{0, 1}});
}

TEST(Adjacency, IsolatedNodeKeepsSelfLoop) {
  const auto adj = build_adjacency(graph(3, {{0, 1}}));
  EXPECT_DOUBLE_EQ(adj.value(2, 2), 1.0);
  EXPECT_EQ(adj.nonzeros(), 5u);
}

TEST(Adjacency, TriangleEntriesAreOneThird) {
  // Every node has degree 3 counting its self loop, so each entry is 1/sqrt(3*3).
  const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 0}};
  const auto adj = build_adjacency(graph(3, edges));
  EXPECT_NEAR(adj.value(0, 1), 1.0 / 3.0, 1e-12);
  expect_matches_oracle(adj, 3, edges);
}

TEST(Adjacency, DirectionAndRelationsCollapse) {
  const auto kg = KnowledgeGraph({"", "", ""}, {{EntityId(0), 0, EntityId(1)},
                                               {EntityId(1), 3, EntityId(0)},
                                               {EntityId(1), 1, EntityId(2)},
                                               {EntityId(2), 2, EntityId(2)}});
  expect_matches_oracle(build_adjacency(kg), 3, {{0, 1}, {1, 2}});
}

TEST(Adjacency, RandomGraphsMatchDenseOracle) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 12;
    std::vector<std::pair<int, int>> edges;
    for (int e = 0; e < static_cast<int>(rng() % 30); ++e) {
      const int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
      if (a != b) edges.emplace_back(a, b);
    }
    expect_matches_oracle(build_adjacency(graph(n, edges)), n, edges);
  }
}

TEST(Adjacency, StackingIsBlockDiagonal) {
  const auto a = build_adjacency(graph(2, {{0, 1}}));
  const auto b = build_adjacency(graph(3, {}));
  const auto s = stack_adjacency(a, b);
  EXPECT_EQ(s.size(), 5u);
  EXPECT_DOUBLE_EQ(s.value(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(s.value(3, 3), 1.0);
  EXPECT_DOUBLE_EQ(s.value(1, 2), 0.0);
}

TEST(GcnTraining, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {17u, 99u, 2024u}) {
    const auto r = gradcheck::run_toy(seed);
    EXPECT_GT(r.parameters, 0u);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(GcnTraining, ZeroEpochsGivesNormalizedInitialization) {
  const auto g1 = graph(3, {{0, 1}, {1, 2}});
  const auto g2 = graph(3, {{0, 1}, {0, 2}});
  AlignmentSet seeds;
  seeds.insert(EntityId(0), EntityId(0));
  auto cfg = small_config();
  cfg.epochs = 0;
  const auto emb = train_embeddings(g1, g2, seeds, cfg);

  GcnEncoder<float> enc(6, cfg);
  const GcnEncoder<float>::Sparse adj = stack_adjacency(build_adjacency(g1), build_adjacency(g2)).matrix().cast<float>();
  const auto& h = enc.forward(adj);
  for (std::size_t r = 0; r < 6; ++r) {
    const float norm = h.row(static_cast<Eigen::Index>(r)).norm();
    for (std::size_t c = 0; c < cfg.output_dim; ++c) {
      EXPECT_NEAR(emb(r, c), h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) / norm, 1e-6);
    }
  }
}

TEST(GcnTraining, SameSeedIsBitwiseDeterministic) {
  const auto g1 = graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  const auto g2 = graph(5, {{0, 1}, {1, 2}, {2, 3}, {1, 4}});
  AlignmentSet seeds;
  seeds.insert(EntityId(0), EntityId(0));
  seeds.insert(EntityId(3), EntityId(3));
  const auto a = train_embeddings(g1, g2, seeds, small_config());
  const auto b = train_embeddings(g1, g2, seeds, small_config());
  EXPECT_EQ(a, b);
  auto other = small_config();
  other.seed += 1;
  EXPECT_NE(a, train_embeddings(g1, g2, seeds, other));
}

TEST(GcnTraining, RowsAreUnitNorm) {
  const auto g1 = graph(6, {{0, 1}, {1, 2}, {2, 3}, {4, 5}});
  const auto g2 = graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 5}});
  AlignmentSet seeds;
  seeds.insert(EntityId(1), EntityId(1));
  seeds.insert(EntityId(4), EntityId(4));
  const auto emb = train_embeddings(g1, g2, seeds, small_config());
  ASSERT_EQ(emb.rows(), 12u);
  for (std::size_t r = 0; r < emb.rows(); ++r) {
    double sq = 0;
    for (float v : emb.row(r)) sq += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-5);
  }
}

namespace {

TrainReport train_toy(double lr, std::size_t epochs) {
  const auto g1 = graph(3, {{0, 1}, {1, 2}});
  const auto g2 = graph(3, {{0, 1}, {0, 2}});
  AlignmentSet seeds;
  seeds.insert(EntityId(0), EntityId(0));
  seeds.insert(EntityId(2), EntityId(1));
  GcnConfig cfg;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  StructuralAligner aligner(g1, g2, cfg);
  return aligner.train(seeds, /*track_full_loss=*/true);
}

}  // namespace

// Strict per-epoch form of the property. Known to fail: the L1 hinge with a
// fixed SGD step overshoots at the kinks and the loss zigzags upward by more
// than the tolerance on some epochs, even with every corruption as negatives.
TEST(GcnTraining, LossIsNonIncreasingOnToy) {
  for (double lr : {0.001, 0.0005}) {
    const auto report = train_toy(lr, 200);
    ASSERT_EQ(report.full_loss.size(), 200u);
    std::size_t violations = 0;
    double worst = 0.0;
    for (std::size_t e = 1; e < report.full_loss.size(); ++e) {
      const double rise = report.full_loss[e] - report.full_loss[e - 1];
      if (rise > 1e-3) ++violations;
      worst = std::max(worst, rise);
    }
    EXPECT_EQ(violations, 0u) << "lr " << lr << ": worst per-epoch rise " << worst;
  }
}

TEST(GcnTraining, LossTrendsDownOnToy) {
  for (double lr : {0.001, 0.0005}) {
    const auto report = train_toy(lr, 200);
    std::vector<double> block_mean;
    for (std::size_t b = 0; b < 4; ++b) {
      double sum = 0;
      for (std::size_t e = 50 * b; e < 50 * (b + 1); ++e) sum += report.full_loss[e];
      block_mean.push_back(sum / 50.0);
    }
    for (std::size_t b = 1; b < block_mean.size(); ++b) EXPECT_LE(block_mean[b], block_mean[b - 1]) << "lr " << lr;
    EXPECT_LT(report.full_loss.back(), 0.5 * report.full_loss.front()) << "lr " << lr;
  }
}

TEST(GcnTraining, IsomorphicToyAlignsUnseededPairs) {
  // Entities 2 and 3 hang off the two seeded entities.
  const std::vector<std::pair<int, int>> edges{{0, 1}, {0, 2}, {1, 3}};
  const auto g1 = graph(4, edges);
  const auto g2 = graph(4, edges);
  AlignmentSet seeds;
  seeds.insert(EntityId(0), EntityId(0));
  seeds.insert(EntityId(1), EntityId(1));
  auto cfg = small_config();
  cfg.epochs = 300;
  cfg.learning_rate = 0.01;
  const auto emb = train_embeddings(g1, g2, seeds, cfg);
  const auto m = structural_distance(emb, 4, 4);
  const auto found = tbnns(m, 2.5);
  EXPECT_TRUE(found.matches.contains(EntityId(2), EntityId(2)));
  EXPECT_TRUE(found.matches.contains(EntityId(3), EntityId(3)));
}

TEST(GcnTraining, EmptySeedsRejected) {
  const auto g = graph(2, {{0, 1}});
  try {
    train_embeddings(g, g, AlignmentSet{}, small_config());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no pseudo-labeled data"), std::string::npos);
  }
}

TEST(StructuralDistance, IdenticalAndAntipodalRows) {
  const EmbeddingMatrix emb(3, 2, {0.6f, 0.8f, 0.6f, 0.8f, -0.6f, -0.8f});
  const auto m = structural_distance(emb, 1, 2);
  EXPECT_NEAR(m(0, 0), 0.0f, 1e-6);
  EXPECT_NEAR(m(0, 1), 2.0f, 1e-6);
}

TEST(StructuralDistance, MatchesNaiveOracle) {
  std::mt19937 rng(8);
  std::normal_distribution<double> g;
  EmbeddingMatrix emb(6, 5);
  std::vector<std::vector<double>> rows(6, std::vector<double>(5));
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      emb(r, c) = static_cast<float>(g(rng));
      rows[r][c] = emb(r, c);
    }
  const auto m = structural_distance(emb, 3, 3);
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t v = 0; v < 3; ++v) EXPECT_NEAR(m(u, v), oracle::cosine_distance(rows[u], rows[3 + v]), 1e-6);
}

TEST(StructuralDistance, RowCountMismatch) {
  EXPECT_THROW(structural_distance(EmbeddingMatrix(4, 2), 2, 3), InvalidArgument);
}

TEST(StructuralDistance, InvariantUnderCommonRotation) {
  std::mt19937 rng(12);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t d = 2 + trial % 7;
    EmbeddingMatrix emb(9, d);
    for (auto& v : emb.values()) v = static_cast<float>(g(rng));
    Eigen::MatrixXd random(d, d);
    for (Eigen::Index i = 0; i < random.size(); ++i) random.data()[i] = g(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random).householderQ();
    EmbeddingMatrix rotated(9, d);
    for (std::size_t r = 0; r < 9; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0;
        for (std::size_t k = 0; k < d; ++k) acc += emb(r, k) * q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
        rotated(r, c) = static_cast<float>(acc);
      }
    const auto a = structural_distance(emb, 4, 5);
    const auto b = structural_distance(rotated, 4, 5);
    for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-5);
  }
}

TEST(FuseAll, ConvexCombination) {
  const DistanceMatrix mt(1, 1, std::vector<float>{0.1f});
  const DistanceMatrix ms(1, 1, std::vector<float>{0.3f});
  EXPECT_NEAR(fuse_all(mt, ms, 0.5)(0, 0), 0.2f, 1e-7);
  EXPECT_EQ(fuse_all(mt, ms, 1.0), mt);
  EXPECT_THROW(fuse_all(mt, DistanceMatrix(2, 1), 0.5), InvalidArgument);
}

TEST(Checkpoint, RoundTripAndBadMagic) {
  const EmbeddingMatrix emb(2, 3, {1, 2, 3, 4, 5, 6.5f});
  std::stringstream buf;
  save_embeddings(emb, buf);
  EXPECT_EQ(load_embeddings(buf), emb);
  std::istringstream bad("NOTMAGIC0000000000000000");
  EXPECT_THROW(load_embeddings(bad), DataError);
  std::string truncated;
  {
    std::stringstream again;
    save_embeddings(emb, again);
    truncated = again.str().substr(0, 30);
  }
  std::istringstream cut(truncated);
  EXPECT_THROW(load_embeddings(cut), DataError);
}
