#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgalign/common.hpp"
#include "kgalign/kg_model.hpp"
#include "kgalign/matcher.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/struct_embed.hpp"

namespace kgalign {

struct ProgressiveConfig {
  double theta0 = 0.05;
  double eta = 0.1;
  double theta_cap = 0.45;
  std::size_t gamma = 30;
  double alpha = 0.5;
  double beta = 0.5;
  bool exclude_matched = true;
  bool adjust_threshold = true;
  bool warm_start = false;
  std::size_t max_rounds = 50;

  void validate() const {
    if (!(theta0 >= 0.0 && theta0 <= theta_cap)) throw InvalidArgument("require 0 <= theta0 <= theta_cap");
    if (!(eta >= 0.0)) throw InvalidArgument("eta must be non-negative");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0, 1]");
    if (max_rounds == 0) throw InvalidArgument("max_rounds must be positive");
  }
};

/// Threshold used in round `round` (0-based): theta0 + round * eta, capped.
inline double threshold_schedule(std::size_t round, const ProgressiveConfig& cfg) {
  if (!cfg.adjust_threshold) return cfg.theta0;
  return std::min(cfg.theta0 + static_cast<double>(round) * cfg.eta, cfg.theta_cap);
}

/// Preliminary pseudo-labels: mutual nearest neighbours of the textual
/// matrix below theta0.
inline AlignmentSet bootstrap_seeds(const DistanceMatrix& textual, const ActiveSet& active_src,
                                    const ActiveSet& active_tgt, double theta0, std::size_t threads = 1) {
  if (!(theta0 >= 0.0)) throw InvalidArgument("theta0 must be non-negative");
  auto seeds = tbnns(textual, active_src, active_tgt, theta0, threads).matches;
  if (seeds.empty()) throw DataError("side information produced no seeds");
  return seeds;
}

inline AlignmentSet bootstrap_seeds(const DistanceMatrix& textual, double theta0, std::size_t threads = 1) {
  return bootstrap_seeds(textual, ActiveSet(textual.rows()), ActiveSet(textual.cols()), theta0, threads);
}

struct RoundRecord {
  std::size_t round = 0;
  double theta = 0.0;
  std::size_t delta_count = 0;       // pairs newly added to the alignment
  std::size_t cumulative_count = 0;  // |S| after the round
  std::size_t conflicts = 0;         // pairs refused by the 1-to-1 check
  double seconds = 0.0;
};

inline std::string to_json_line(const RoundRecord& r) {
  nlohmann::json j{{"round", r.round},
                   {"theta", r.theta},
                   {"delta_count", r.delta_count},
                   {"cumulative_count", r.cumulative_count},
                   {"conflicts", r.conflicts},
                   {"seconds", r.seconds}};
  return j.dump();
}

struct ProgressiveOptions {
  std::optional<ActiveSet> active_src;  // defaults to every source entity
  std::optional<ActiveSet> active_tgt;
  std::size_t threads = 1;
  bool keep_final_matrix = false;
  /// Structural embeddings to use in the first round instead of training.
  std::optional<EmbeddingMatrix> initial_embeddings;
  std::function<void(const RoundRecord&)> on_round;
};

struct ProgressiveOutcome {
  MatchResult result;
  AlignmentSet seeds;
  std::vector<RoundRecord> history;
  bool hit_max_rounds = false;
  std::optional<DistanceMatrix> final_matrix;
  EmbeddingMatrix final_embeddings;
};

/// Self-training loop. Each round trains structural embeddings on the
/// current alignment S, fuses them with the textual matrix, runs TBNNS on
/// the active entities, merges the new pairs into S, raises the threshold
/// and (optionally) removes aligned entities from the active sets. Stops
/// once a round contributes no more than `gamma` new pairs.
///
/// A round's delta counts pairs not already in S, except in the first round
/// where S is still empty and every accepted TBNNS pair (including re-found
/// seeds) counts. With exclusion off, pairs reusing an aligned entity are
/// dropped; earlier rounds and lower source ids win.
inline ProgressiveOutcome run(const KnowledgeGraph& g1, const KnowledgeGraph& g2, const DistanceMatrix& textual,
                              const ProgressiveConfig& cfg, const GcnConfig& gcn_cfg,
                              ProgressiveOptions options = {}) {
  cfg.validate();
  if (textual.rows() != g1.size() || textual.cols() != g2.size()) {
    throw InvalidArgument("textual matrix shape does not match the graphs");
  }
  const ActiveSet initial_src = options.active_src.value_or(ActiveSet(g1.size()));
  const ActiveSet initial_tgt = options.active_tgt.value_or(ActiveSet(g2.size()));
  ActiveSet active_src = initial_src;
  ActiveSet active_tgt = initial_tgt;

  ProgressiveOutcome out;
  out.seeds = bootstrap_seeds(textual, active_src, active_tgt, cfg.theta0, options.threads);
  log(LogLevel::kInfo, "bootstrap produced ", out.seeds.size(), " seed pairs");

  AlignmentSet aligned = out.seeds;
  StructuralAligner aligner(g1, g2, gcn_cfg);
  DistanceMatrix fused;

  for (std::size_t round = 0;; ++round) {
    const auto started = std::chrono::steady_clock::now();
    const double theta = threshold_schedule(round, cfg);

    if (round == 0 && options.initial_embeddings) {
      out.final_embeddings = *options.initial_embeddings;
    } else {
      if (round > 0 && !cfg.warm_start) aligner.reset();
      aligner.train(aligned);
      out.final_embeddings = aligner.embeddings();
    }
    fused = structural_distance(out.final_embeddings, g1.size(), g2.size(), options.threads);
    convex_combine_into(textual, fused, cfg.beta, options.threads);

    const auto found = tbnns(fused, active_src, active_tgt, theta, options.threads);
    RoundRecord rec;
    rec.round = round;
    rec.theta = theta;
    for (const auto& [s, t] : found.matches) {
      if (aligned.contains(s, t)) {
        if (round == 0) ++rec.delta_count;
        continue;
      }
      if (aligned.try_insert(s, t)) {
        ++rec.delta_count;
      } else {
        ++rec.conflicts;
      }
    }
    if (rec.conflicts > 0) log(LogLevel::kDebug, "round ", round, ": dropped ", rec.conflicts, " conflicting pairs");
    if (cfg.exclude_matched) {
      for (const auto& [s, t] : aligned) {
        active_src.erase(s);
        active_tgt.erase(t);
      }
    }
    rec.cumulative_count = aligned.size();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log(LogLevel::kInfo, "round ", round, " theta=", theta, " new=", rec.delta_count, " total=", rec.cumulative_count);
    out.history.push_back(rec);
    if (options.on_round) options.on_round(rec);

    if (rec.delta_count <= cfg.gamma) break;
    if (round + 1 >= cfg.max_rounds) {
      out.hit_max_rounds = true;
      if (cfg.max_rounds > 1) log(LogLevel::kWarn, "stopped after max_rounds=", cfg.max_rounds, " without convergence");
      break;
    }
  }

  out.result.matches = aligned;
  for (auto u : initial_src.ids())
    if (!aligned.has_source(u)) out.result.unmatched_sources.push_back(u);
  for (auto v : initial_tgt.ids())
    if (!aligned.has_target(v)) out.result.unmatched_targets.push_back(v);
  if (options.keep_final_matrix) out.final_matrix = std::move(fused);
  return out;
}

}  // namespace kgalign
