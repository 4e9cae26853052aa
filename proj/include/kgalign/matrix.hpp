#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg_model.hpp"

namespace kgalign {

/// Dense row-major source x target distance matrix in 32-bit floats.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DistanceMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) throw InvalidArgument("distance matrix value count does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  float& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  bool same_shape(const DistanceMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  DistanceMatrix transposed() const {
    DistanceMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
};

/// n x d real vectors, one row per entity.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), values_(rows * dim, 0.0f) {}
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
      : rows_(rows), dim_(dim), values_(std::move(values)) {
    if (values_.size() != rows * dim) throw InvalidArgument("embedding value count does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<float> row(std::size_t r) { return {values_.data() + r * dim_, dim_}; }
  std::span<const float> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }
  float& operator()(std::size_t r, std::size_t c) { return values_[r * dim_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return values_[r * dim_ + c]; }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  /// Copies rows [begin, begin + count).
  EmbeddingMatrix slice(std::size_t begin, std::size_t count) const {
    if (begin + count > rows_) throw InvalidArgument("embedding slice out of range");
    return EmbeddingMatrix(count, dim_,
                           std::vector<float>(values_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                                              values_.begin() + static_cast<std::ptrdiff_t>((begin + count) * dim_)));
  }

  void normalize_rows() {
    for (std::size_t r = 0; r < rows_; ++r) {
      auto v = row(r);
      double sq = 0.0;
      for (float x : v) sq += static_cast<double>(x) * x;
      if (sq <= 0.0) continue;
      const double inv = 1.0 / std::sqrt(sq);
      for (float& x : v) x = static_cast<float>(x * inv);
    }
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// Membership mask over the entities of one graph. Matching code treats
/// masked-out rows/columns as +inf instead of copying the matrix.
class ActiveSet {
 public:
  ActiveSet() = default;
  explicit ActiveSet(std::size_t universe, bool all = true) : mask_(universe, all ? 1 : 0), count_(all ? universe : 0) {}

  static ActiveSet of(std::size_t universe, std::span<const EntityId> ids) {
    ActiveSet s(universe, false);
    for (auto id : ids) s.insert(id);
    return s;
  }

  std::size_t universe() const { return mask_.size(); }
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool contains(EntityId e) const { return e.index() < mask_.size() && mask_[e.index()] != 0; }
  bool contains(std::size_t i) const { return i < mask_.size() && mask_[i] != 0; }

  void insert(EntityId e) {
    if (e.index() >= mask_.size()) throw InvalidArgument("active-set id out of range");
    if (!mask_[e.index()]) {
      mask_[e.index()] = 1;
      ++count_;
    }
  }
  void erase(EntityId e) {
    if (e.index() < mask_.size() && mask_[e.index()]) {
      mask_[e.index()] = 0;
      --count_;
    }
  }

  std::vector<EntityId> ids() const {
    std::vector<EntityId> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < mask_.size(); ++i)
      if (mask_[i]) out.emplace_back(i);
    return out;
  }

  friend bool operator==(const ActiveSet&, const ActiveSet&) = default;

 private:
  std::vector<std::uint8_t> mask_;
  std::size_t count_ = 0;
};

/// Elementwise w * a + (1 - w) * b.
inline DistanceMatrix convex_combine(const DistanceMatrix& a, const DistanceMatrix& b, double weight,
                                     std::size_t threads = 1) {
  if (!a.same_shape(b)) throw InvalidArgument("distance matrices differ in shape");
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("fusion weight must lie in [0, 1]");
  DistanceMatrix out(a.rows(), a.cols());
  const float w = static_cast<float>(weight);
  const float wc = static_cast<float>(1.0 - weight);
  parallel_for(a.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto ra = a.row(r);
      const auto rb = b.row(r);
      auto ro = out.row(r);
      for (std::size_t c = 0; c < ra.size(); ++c) {
        // Boundary weights return the selected input bit-for-bit.
        ro[c] = weight == 1.0 ? ra[c] : weight == 0.0 ? rb[c] : w * ra[c] + wc * rb[c];
      }
    }
  });
  return out;
}

/// In-place variant: b <- w * a + (1 - w) * b. Keeps peak memory at two matrices.
inline void convex_combine_into(const DistanceMatrix& a, DistanceMatrix& b, double weight, std::size_t threads = 1) {
  if (!a.same_shape(b)) throw InvalidArgument("distance matrices differ in shape");
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("fusion weight must lie in [0, 1]");
  const float w = static_cast<float>(weight);
  const float wc = static_cast<float>(1.0 - weight);
  parallel_for(a.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto ra = a.row(r);
      auto rb = b.row(r);
      for (std::size_t c = 0; c < ra.size(); ++c) {
        rb[c] = weight == 1.0 ? ra[c] : weight == 0.0 ? rb[c] : w * ra[c] + wc * rb[c];
      }
    }
  });
}

/// 1 - cos(src_u, tgt_v) for every pair; a zero-norm vector has cosine 0.
inline DistanceMatrix cosine_distance(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt, std::size_t threads = 1) {
  if (src.dim() != tgt.dim()) {
    throw InvalidArgument("embedding dimensions differ: " + std::to_string(src.dim()) + " vs " +
                          std::to_string(tgt.dim()));
  }
  auto norms = [](const EmbeddingMatrix& m) {
    std::vector<double> n(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double sq = 0.0;
      for (float x : m.row(r)) sq += static_cast<double>(x) * x;
      n[r] = std::sqrt(sq);
    }
    return n;
  };
  const auto ns = norms(src);
  const auto nt = norms(tgt);
  DistanceMatrix out(src.rows(), tgt.rows());
  const std::size_t d = src.dim();
  parallel_for(src.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const auto a = src.row(u);
      for (std::size_t v = 0; v < tgt.rows(); ++v) {
        double cos = 0.0;
        if (ns[u] > 0.0 && nt[v] > 0.0) {
          const auto b = tgt.row(v);
          double dot = 0.0;
          for (std::size_t k = 0; k < d; ++k) dot += static_cast<double>(a[k]) * b[k];
          cos = std::clamp(dot / (ns[u] * nt[v]), -1.0, 1.0);
        }
        out(u, v) = static_cast<float>(1.0 - cos);
      }
    }
  });
  return out;
}

}  // namespace kgalign
