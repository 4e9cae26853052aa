#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg_model.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

struct MatchResult {
  AlignmentSet matches;
  std::vector<EntityId> unmatched_sources;
  std::vector<EntityId> unmatched_targets;
};

/// Result of matchers without the 1-to-1 constraint; a target may occur in
/// several pairs.
struct RelaxedMatchResult {
  std::vector<std::pair<EntityId, EntityId>> matches;
  std::vector<EntityId> unmatched_sources;
};

/// Index of the smallest value, lowest index on ties.
inline std::size_t tie_break(std::span<const float> row) {
  if (row.empty()) throw InvalidArgument("tie_break needs a non-empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] < row[best]) best = i;
  }
  return best;
}

namespace detail {

inline constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

inline void check_active(const DistanceMatrix& m, const ActiveSet& src, const ActiveSet& tgt) {
  if (src.universe() != m.rows() || tgt.universe() != m.cols()) {
    throw InvalidArgument("active sets do not match the distance matrix shape");
  }
}

/// Nearest active target of every active source (kNone for inactive rows).
inline std::vector<std::uint32_t> row_argmin(const DistanceMatrix& m, const ActiveSet& src, const ActiveSet& tgt,
                                             std::size_t threads) {
  std::vector<std::uint32_t> best(m.rows(), kNone);
  parallel_for(m.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      if (!src.contains(u)) continue;
      const auto row = m.row(u);
      float best_value = std::numeric_limits<float>::infinity();
      std::uint32_t arg = kNone;
      for (std::size_t v = 0; v < row.size(); ++v) {
        if (!tgt.contains(v)) continue;
        if (arg == kNone || row[v] < best_value) {
          best_value = row[v];
          arg = static_cast<std::uint32_t>(v);
        }
      }
      best[u] = arg;
    }
  });
  return best;
}

/// Nearest active source of every active target. Works over row blocks and
/// merges in row order, so ties resolve to the lowest source index.
inline std::vector<std::uint32_t> col_argmin(const DistanceMatrix& m, const ActiveSet& src, const ActiveSet& tgt,
                                             std::size_t threads) {
  const std::size_t cols = m.cols();
  threads = std::max<std::size_t>(1, std::min(threads, m.rows()));
  const std::size_t block = m.rows() == 0 ? 0 : (m.rows() + threads - 1) / threads;
  std::vector<std::vector<std::uint32_t>> partial(threads, std::vector<std::uint32_t>(cols, kNone));
  parallel_for(threads, threads, [&](std::size_t tb, std::size_t te) {
    for (std::size_t t = tb; t < te; ++t) {
      auto& arg = partial[t];
      const std::size_t begin = t * block;
      const std::size_t end = std::min(m.rows(), begin + block);
      for (std::size_t u = begin; u < end; ++u) {
        if (!src.contains(u)) continue;
        const auto row = m.row(u);
        for (std::size_t v = 0; v < cols; ++v) {
          if (!tgt.contains(v)) continue;
          if (arg[v] == kNone || row[v] < m(arg[v], v)) arg[v] = static_cast<std::uint32_t>(u);
        }
      }
    }
  });
  std::vector<std::uint32_t> best(cols, kNone);
  for (const auto& arg : partial) {
    for (std::size_t v = 0; v < cols; ++v) {
      if (arg[v] == kNone) continue;
      if (best[v] == kNone || m(arg[v], v) < m(best[v], v)) best[v] = arg[v];
    }
  }
  return best;
}

}  // namespace detail

/// Thresholded bi-directional nearest-neighbour search. (u, v) is matched iff
/// v is u's nearest active target, u is v's nearest active source, and
/// M(u, v) < theta. Every other active entity is reported unmatched.
inline MatchResult tbnns(const DistanceMatrix& m, const ActiveSet& active_src, const ActiveSet& active_tgt,
                         double theta, std::size_t threads = 1) {
  if (!(theta >= 0.0)) throw InvalidArgument("theta must be non-negative");
  detail::check_active(m, active_src, active_tgt);
  MatchResult out;
  if (active_src.empty() || active_tgt.empty()) {
    out.unmatched_sources = active_src.ids();
    out.unmatched_targets = active_tgt.ids();
    return out;
  }
  const auto to_target = detail::row_argmin(m, active_src, active_tgt, threads);
  const auto to_source = detail::col_argmin(m, active_src, active_tgt, threads);
  for (std::size_t u = 0; u < m.rows(); ++u) {
    if (!active_src.contains(u)) continue;
    const auto v = to_target[u];
    if (v != detail::kNone && to_source[v] == u && static_cast<double>(m(u, v)) < theta) {
      out.matches.insert(EntityId(u), EntityId(v));
    } else {
      out.unmatched_sources.emplace_back(u);
    }
  }
  for (std::size_t v = 0; v < m.cols(); ++v) {
    if (active_tgt.contains(v) && !out.matches.has_target(EntityId(v))) out.unmatched_targets.emplace_back(v);
  }
  return out;
}

inline MatchResult tbnns(const DistanceMatrix& m, double theta, std::size_t threads = 1) {
  return tbnns(m, ActiveSet(m.rows()), ActiveSet(m.cols()), theta, threads);
}

/// NIL-threshold baseline: every active source takes its nearest active
/// target when that distance is below `nil_theta`. No mutuality check.
inline RelaxedMatchResult nil_threshold_baseline(const DistanceMatrix& m, const ActiveSet& active_src,
                                                 const ActiveSet& active_tgt, double nil_theta,
                                                 std::size_t threads = 1) {
  detail::check_active(m, active_src, active_tgt);
  RelaxedMatchResult out;
  const auto to_target = detail::row_argmin(m, active_src, active_tgt, threads);
  for (std::size_t u = 0; u < m.rows(); ++u) {
    if (!active_src.contains(u)) continue;
    const auto v = to_target[u];
    if (v != detail::kNone && static_cast<double>(m(u, v)) < nil_theta) {
      out.matches.emplace_back(EntityId(u), EntityId(v));
    } else {
      out.unmatched_sources.emplace_back(u);
    }
  }
  return out;
}

/// Plain nearest-neighbour assignment for every active source.
inline RelaxedMatchResult nearest_neighbor_assignment(const DistanceMatrix& m, const ActiveSet& active_src,
                                                      const ActiveSet& active_tgt, std::size_t threads = 1) {
  return nil_threshold_baseline(m, active_src, active_tgt, std::numeric_limits<double>::infinity(), threads);
}

/// `src \t tgt` per match, then `src \t NIL` per unmatched source; original ids.
inline void write_match_result(const MatchResult& result, const KnowledgeGraph& source,
                               const KnowledgeGraph& target, std::ostream& matches_out,
                               std::ostream& unmatched_out) {
  write_alignment(result.matches, source, target, matches_out);
  for (auto u : result.unmatched_sources) unmatched_out << source.original_id(u) << "\tNIL\n";
}

/// Predictions in original ids, as read back from a results file.
struct RawPredictions {
  std::vector<std::pair<std::int64_t, std::int64_t>> matches;
  std::vector<std::int64_t> unmatched_sources;
};

inline RawPredictions read_predictions(std::istream& in) {
  RawPredictions out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = strip_cr(line);
    if (trim(view).empty()) continue;
    const auto fields = split_tabs(view);
    if (fields.size() != 2) throw DataError("predictions line " + std::to_string(line_no) + ": expected 2 fields");
    const auto s = detail::parse_id(fields[0], line_no, "source id");
    if (trim(fields[1]) == "NIL") {
      out.unmatched_sources.push_back(s);
    } else {
      out.matches.emplace_back(s, detail::parse_id(fields[1], line_no, "target id"));
    }
  }
  return out;
}

}  // namespace kgalign
