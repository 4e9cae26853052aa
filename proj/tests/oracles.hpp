#pragma once

// Reference implementations used only by tests. Each one follows the plain
// textbook definition and shares no code path with the library.

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Full (m+1) x (n+1) edit-distance table over bytes/code units.
template <typename Str>
std::size_t edit_distance(const Str& a, const Str& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t best = d[i - 1][j] + 1;
      if (d[i][j - 1] + 1 < best) best = d[i][j - 1] + 1;
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      if (sub < best) best = sub;
      d[i][j] = best;
    }
  return d[a.size()][b.size()];
}

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Dense D^-1/2 (A + I) D^-1/2 from an undirected edge list.
inline std::vector<std::vector<double>> normalized_adjacency(std::size_t n,
                                                             const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  for (auto [u, v] : edges) {
    a[u][v] = 1.0;
    a[v][u] = 1.0;
  }
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i] * deg[j]);
  return a;
}

/// Literal double loop: for every active source take its nearest active
/// target, then check that this target's nearest active source is the
/// source itself, and that the distance is below theta. Lowest index wins ties.
struct Match {
  std::size_t src, tgt;
  bool operator==(const Match&) const = default;
};

template <typename Matrix>
std::vector<Match> tbnns(const Matrix& m, std::size_t rows, std::size_t cols, const std::vector<bool>& src_on,
                         const std::vector<bool>& tgt_on, double theta) {
  std::vector<Match> out;
  for (std::size_t u = 0; u < rows; ++u) {
    if (!src_on[u]) continue;
    long best_v = -1;
    for (std::size_t v = 0; v < cols; ++v) {
      if (!tgt_on[v]) continue;
      if (best_v < 0 || m(u, v) < m(u, static_cast<std::size_t>(best_v))) best_v = static_cast<long>(v);
    }
    if (best_v < 0) continue;
    long best_u = -1;
    for (std::size_t w = 0; w < rows; ++w) {
      if (!src_on[w]) continue;
      if (best_u < 0 || m(w, static_cast<std::size_t>(best_v)) < m(static_cast<std::size_t>(best_u), static_cast<std::size_t>(best_v)))
        best_u = static_cast<long>(w);
    }
    if (static_cast<std::size_t>(best_u) == u && m(u, static_cast<std::size_t>(best_v)) < theta) {
      out.push_back({u, static_cast<std::size_t>(best_v)});
    }
  }
  return out;
}

}  // namespace oracle
