#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg_model.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

struct GcnConfig {
  std::size_t layers = 2;
  std::size_t hidden_dim = 128;
  std::size_t output_dim = 128;
  std::size_t negatives_per_positive = 5;
  double margin = 3.0;
  std::size_t epochs = 100;
  double learning_rate = 0.001;
  std::uint64_t seed = 20210411;

  void validate() const {
    if (layers < 1) throw InvalidArgument("gcn layers must be >= 1");
    if (hidden_dim == 0 || output_dim == 0) throw InvalidArgument("gcn dimensions must be positive");
    if (negatives_per_positive == 0) throw InvalidArgument("negatives_per_positive must be positive");
    if (!(margin > 0.0)) throw InvalidArgument("margin must be positive");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  }
};

/// Symmetrically normalised adjacency with self loops, D^-1/2 (A + I) D^-1/2,
/// over the undirected entity graph (relations ignored).
class NormalizedAdjacency {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  NormalizedAdjacency() = default;
  explicit NormalizedAdjacency(Sparse m) : m_(std::move(m)) {}

  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t nonzeros() const { return static_cast<std::size_t>(m_.nonZeros()); }
  double value(std::size_t r, std::size_t c) const {
    return m_.coeff(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  const Sparse& matrix() const { return m_; }

 private:
  Sparse m_;
};

inline NormalizedAdjacency build_adjacency(const KnowledgeGraph& kg) {
  const std::size_t n = kg.size();
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace(i, i);
  for (const auto& t : kg.triples()) {
    edges.emplace(t.head.index(), t.tail.index());
    edges.emplace(t.tail.index(), t.head.index());
  }
  std::vector<double> degree(n, 0.0);
  for (const auto& [r, c] : edges) degree[r] += 1.0;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges.size());
  for (const auto& [r, c] : edges) {
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), 1.0 / std::sqrt(degree[r] * degree[c]));
  }
  NormalizedAdjacency::Sparse m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trips.begin(), trips.end());
  return NormalizedAdjacency(std::move(m));
}

/// Block-diagonal stacking: entities of `second` follow those of `first`.
inline NormalizedAdjacency stack_adjacency(const NormalizedAdjacency& first, const NormalizedAdjacency& second) {
  const auto n1 = static_cast<Eigen::Index>(first.size());
  const auto n = n1 + static_cast<Eigen::Index>(second.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(first.nonzeros() + second.nonzeros());
  auto append = [&](const NormalizedAdjacency::Sparse& m, Eigen::Index offset) {
    for (Eigen::Index r = 0; r < m.outerSize(); ++r)
      for (NormalizedAdjacency::Sparse::InnerIterator it(m, r); it; ++it)
        trips.emplace_back(static_cast<int>(r + offset), static_cast<int>(it.col() + offset), it.value());
  };
  append(first.matrix(), 0);
  append(second.matrix(), n1);
  NormalizedAdjacency::Sparse m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return NormalizedAdjacency(std::move(m));
}

/// One hinge term: positive pair and its corrupted counterpart, as row
/// indices into the stacked (source then target) entity table.
struct RankingSample {
  std::uint32_t pos_src, pos_tgt, neg_src, neg_tgt;
};

/// GCN encoder over free per-entity input embeddings. Hidden layers use
/// ReLU, the output layer is linear. Weights are shared by both graphs.
template <typename Scalar>
class GcnEncoder {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  GcnEncoder() = default;

  GcnEncoder(std::size_t entities, const GcnConfig& cfg) { initialize(entities, cfg); }

  void initialize(std::size_t entities, const GcnConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    auto fill_uniform = [&rng](Matrix& m, double bound) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * bound);
      }
    };
    const auto h = static_cast<Eigen::Index>(cfg.hidden_dim);
    features_.resize(static_cast<Eigen::Index>(entities), h);
    fill_uniform(features_, std::sqrt(3.0 / static_cast<double>(cfg.hidden_dim)));
    weights_.clear();
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const auto out = l + 1 == cfg.layers ? static_cast<Eigen::Index>(cfg.output_dim) : h;
      Matrix w(h, out);
      fill_uniform(w, std::sqrt(6.0 / static_cast<double>(h + out)));
      weights_.push_back(std::move(w));
    }
  }

  std::size_t layers() const { return weights_.size(); }

  /// Parameter blocks: input features first, then one weight per layer.
  std::vector<Matrix*> parameters() {
    std::vector<Matrix*> out{&features_};
    for (auto& w : weights_) out.push_back(&w);
    return out;
  }

  /// Forward pass; caches activations for backward().
  const Matrix& forward(const Sparse& adj) {
    aggregated_.resize(weights_.size());
    pre_.resize(weights_.size());
    activations_.resize(weights_.size() - 1);
    const Matrix* h = &features_;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      aggregated_[l] = adj * (*h);
      pre_[l] = aggregated_[l] * weights_[l];
      if (l + 1 < weights_.size()) {
        activations_[l] = pre_[l].cwiseMax(Scalar(0));
        h = &activations_[l];
      }
    }
    return pre_.back();
  }

  const Matrix& output() const { return pre_.back(); }

  /// Sum of max(0, |p_s - p_t|_1 + margin - |n_s - n_t|_1) over samples,
  /// evaluated on the cached forward output. Fills dLoss/dOutput when asked.
  Scalar ranking_loss(const std::vector<RankingSample>& samples, Scalar margin, Matrix* grad_out = nullptr) const {
    const Matrix& h = pre_.back();
    if (grad_out) grad_out->setZero(h.rows(), h.cols());
    Scalar loss = 0;
    for (const auto& s : samples) {
      const Scalar pos = (h.row(s.pos_src) - h.row(s.pos_tgt)).cwiseAbs().sum();
      const Scalar neg = (h.row(s.neg_src) - h.row(s.neg_tgt)).cwiseAbs().sum();
      const Scalar term = pos + margin - neg;
      if (term <= 0) continue;
      loss += term;
      if (grad_out) {
        const auto dp = (h.row(s.pos_src) - h.row(s.pos_tgt)).unaryExpr([](Scalar x) { return sign(x); }).eval();
        const auto dn = (h.row(s.neg_src) - h.row(s.neg_tgt)).unaryExpr([](Scalar x) { return sign(x); }).eval();
        grad_out->row(s.pos_src) += dp;
        grad_out->row(s.pos_tgt) -= dp;
        grad_out->row(s.neg_src) -= dn;
        grad_out->row(s.neg_tgt) += dn;
      }
    }
    return loss;
  }

  /// Back-propagates dLoss/dOutput; returns gradients in parameters() order.
  /// The adjacency is symmetric, so it serves as its own transpose.
  std::vector<Matrix> backward(const Sparse& adj, Matrix grad_out) const {
    std::vector<Matrix> grads(weights_.size() + 1);
    Matrix upstream = std::move(grad_out);
    for (std::size_t l = weights_.size(); l-- > 0;) {
      if (l + 1 < weights_.size()) {
        upstream = upstream.cwiseProduct(
            pre_[l].unaryExpr([](Scalar x) { return x > Scalar(0) ? Scalar(1) : Scalar(0); }));
      }
      grads[l + 1] = aggregated_[l].transpose() * upstream;
      const Matrix d_agg = upstream * weights_[l].transpose();
      upstream = adj * d_agg;
    }
    grads[0] = std::move(upstream);
    return grads;
  }

  void sgd_step(const std::vector<Matrix>& grads, Scalar lr) {
    auto params = parameters();
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * grads[i];
  }

 private:
  static Scalar sign(Scalar x) { return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0)); }

  Matrix features_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> aggregated_;
  std::vector<Matrix> pre_;
  std::vector<Matrix> activations_;
};

/// Draws `negatives` corrupted pairs per seed, replacing the source or the
/// target side with a uniformly chosen different entity of the same graph.
template <typename Engine>
std::vector<RankingSample> sample_negatives(const AlignmentSet& seeds, std::size_t n1, std::size_t n2,
                                            std::size_t negatives, Engine& rng) {
  std::vector<RankingSample> out;
  out.reserve(seeds.size() * negatives);
  for (const auto& [s, t] : seeds) {
    const auto ps = static_cast<std::uint32_t>(s.index());
    const auto pt = static_cast<std::uint32_t>(n1 + t.index());
    for (std::size_t k = 0; k < negatives; ++k) {
      RankingSample sample{ps, pt, ps, pt};
      const bool corrupt_source = (rng() & 1u) != 0;
      if (corrupt_source && n1 > 1) {
        std::size_t r;
        do r = uniform_index(rng, n1);
        while (r == s.index());
        sample.neg_src = static_cast<std::uint32_t>(r);
      } else if (n2 > 1) {
        std::size_t r;
        do r = uniform_index(rng, n2);
        while (r == t.index());
        sample.neg_tgt = static_cast<std::uint32_t>(n1 + r);
      }
      out.push_back(sample);
    }
  }
  return out;
}

struct TrainReport {
  std::vector<double> epoch_loss;  // loss on the epoch's sampled negatives, before the update
  std::vector<double> full_loss;   // loss over every corruption of every seed; filled on request
};

/// Every single-side corruption of every seed pair.
inline std::vector<RankingSample> all_corruptions(const AlignmentSet& seeds, std::size_t n1, std::size_t n2) {
  std::vector<RankingSample> out;
  for (const auto& [s, t] : seeds) {
    const auto ps = static_cast<std::uint32_t>(s.index());
    const auto pt = static_cast<std::uint32_t>(n1 + t.index());
    for (std::size_t r = 0; r < n1; ++r)
      if (r != s.index()) out.push_back({ps, pt, static_cast<std::uint32_t>(r), pt});
    for (std::size_t r = 0; r < n2; ++r)
      if (r != t.index()) out.push_back({ps, pt, ps, static_cast<std::uint32_t>(n1 + r)});
  }
  return out;
}

/// Holds both graphs' structure and an encoder that can be retrained from
/// scratch or warm-started across progressive rounds.
class StructuralAligner {
 public:
  StructuralAligner(const KnowledgeGraph& g1, const KnowledgeGraph& g2, GcnConfig cfg)
      : n1_(g1.size()), n2_(g2.size()), cfg_(cfg) {
    cfg_.validate();
    adj_ = stack_adjacency(build_adjacency(g1), build_adjacency(g2)).matrix().cast<float>();
    reset();
  }

  void reset() { encoder_.initialize(n1_ + n2_, cfg_); }

  /// Runs cfg.epochs SGD epochs on `seeds`. `track_full_loss` also records
  /// the loss over all corruptions each epoch, which costs O(|seeds| (n1 + n2)).
  TrainReport train(const AlignmentSet& seeds, bool track_full_loss = false) {
    if (seeds.empty()) throw DataError("no pseudo-labeled data");
    for (const auto& [s, t] : seeds) {
      if (s.index() >= n1_ || t.index() >= n2_) throw InvalidArgument("seed pair references an unknown entity");
    }
    TrainReport report;
    std::mt19937_64 rng(cfg_.seed ^ 0x9E3779B97F4A7C15ULL);
    const auto lr = static_cast<float>(cfg_.learning_rate);
    const auto margin = static_cast<float>(cfg_.margin);
    Encoder::Matrix grad;
    const auto everything = track_full_loss ? all_corruptions(seeds, n1_, n2_) : std::vector<RankingSample>{};
    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      const auto samples = sample_negatives(seeds, n1_, n2_, cfg_.negatives_per_positive, rng);
      encoder_.forward(adj_);
      report.epoch_loss.push_back(encoder_.ranking_loss(samples, margin, &grad));
      if (track_full_loss) report.full_loss.push_back(encoder_.ranking_loss(everything, margin));
      encoder_.sgd_step(encoder_.backward(adj_, std::move(grad)), lr);
    }
    return report;
  }

  /// Current encoder output, L2-normalised per row (n1 + n2 rows).
  EmbeddingMatrix embeddings() {
    const auto& h = encoder_.forward(adj_);
    EmbeddingMatrix out(static_cast<std::size_t>(h.rows()), static_cast<std::size_t>(h.cols()));
    std::copy(h.data(), h.data() + h.size(), out.values().begin());
    out.normalize_rows();
    return out;
  }

  std::size_t source_count() const { return n1_; }
  std::size_t target_count() const { return n2_; }
  const GcnConfig& config() const { return cfg_; }

 private:
  using Encoder = GcnEncoder<float>;
  std::size_t n1_, n2_;
  GcnConfig cfg_;
  Encoder::Sparse adj_;
  Encoder encoder_;
};

/// Trains a fresh encoder on `seeds` and returns stacked, row-normalised
/// embeddings (source entities first).
inline EmbeddingMatrix train_embeddings(const KnowledgeGraph& g1, const KnowledgeGraph& g2,
                                        const AlignmentSet& seeds, const GcnConfig& cfg,
                                        TrainReport* report = nullptr) {
  StructuralAligner aligner(g1, g2, cfg);
  auto r = aligner.train(seeds);
  if (report) *report = std::move(r);
  return aligner.embeddings();
}

/// 1 - cos between source row u and target row n1 + v.
inline DistanceMatrix structural_distance(const EmbeddingMatrix& emb, std::size_t n1, std::size_t n2,
                                          std::size_t threads = 1) {
  if (emb.rows() != n1 + n2) {
    throw InvalidArgument("embedding has " + std::to_string(emb.rows()) + " rows, expected " +
                          std::to_string(n1 + n2));
  }
  return cosine_distance(emb.slice(0, n1), emb.slice(n1, n2), threads);
}

/// beta * textual + (1 - beta) * structural.
inline DistanceMatrix fuse_all(const DistanceMatrix& textual, const DistanceMatrix& structural, double beta,
                               std::size_t threads = 1) {
  return convex_combine(textual, structural, beta, threads);
}

namespace detail {
inline constexpr char kEmbeddingMagic[8] = {'K', 'G', 'A', 'E', 'M', 'B', '0', '1'};
}

/// Binary checkpoint: 8-byte magic, uint64 rows, uint64 dim (little endian),
/// then row-major float32 values.
inline void save_embeddings(const EmbeddingMatrix& emb, std::ostream& out) {
  out.write(detail::kEmbeddingMagic, sizeof(detail::kEmbeddingMagic));
  const std::uint64_t header[2] = {emb.rows(), emb.dim()};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(emb.values().data()),
            static_cast<std::streamsize>(emb.values().size() * sizeof(float)));
  if (!out) throw DataError("failed to write embedding checkpoint");
}

inline EmbeddingMatrix load_embeddings(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, detail::kEmbeddingMagic, sizeof(magic)) != 0) {
    throw DataError("not an embedding checkpoint (bad magic)");
  }
  std::uint64_t header[2];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) throw DataError("truncated checkpoint header");
  std::vector<float> values(header[0] * header[1]);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)))) {
    throw DataError("truncated checkpoint body");
  }
  return EmbeddingMatrix(header[0], header[1], std::move(values));
}

}  // namespace kgalign
