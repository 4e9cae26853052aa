#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgalign/common.hpp"
#include "kgalign/kg_model.hpp"
#include "kgalign/matcher.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/progressive.hpp"
#include "kgalign/side_features.hpp"
#include "kgalign/struct_embed.hpp"

namespace kgalign {

struct EvalReport {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t found = 0;
  std::size_t correct = 0;
  std::size_t gold = 0;
  double unmatchable_in_results = 0.0;  // share of found pairs whose source has no gold partner

  nlohmann::json to_json() const {
    nlohmann::json j{{"precision", precision}, {"recall", recall},   {"f1", f1},
                     {"found", found},         {"correct", correct}, {"gold", gold},
                     {"unmatchable_in_results", unmatchable_in_results}};
    if (!label.empty()) j["label"] = label;
    return j;
  }
};

/// Open-world test construction: a share of gold pairs is held out as a
/// training set; every other KG1 entity is a test source (those without a
/// gold pair are unmatchable) and the remaining gold targets are test targets.
struct OpenWorldSplit {
  AlignmentSet train_pairs;
  ActiveSet test_sources;
  ActiveSet test_targets;
  AlignmentSet gold_test;
  std::vector<EntityId> unmatchable_sources;
};

inline OpenWorldSplit build_split(const KnowledgeGraph& g1, const KnowledgeGraph& g2, const AlignmentSet& gold,
                                  double train_fraction = 0.3, std::uint64_t seed = 2021) {
  if (gold.empty()) throw InvalidArgument("gold alignment is empty");
  if (!(train_fraction >= 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must lie in [0, 1)");
  auto pairs = gold.pairs();
  std::mt19937_64 rng(seed);
  shuffle(rng, pairs);
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(pairs.size()) + 1e-9));

  OpenWorldSplit split;
  split.test_sources = ActiveSet(g1.size(), true);
  split.test_targets = ActiveSet(g2.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [s, t] = pairs[i];
    if (s.index() >= g1.size() || t.index() >= g2.size()) throw DataError("gold pair references an unknown entity");
    if (i < n_train) {
      split.train_pairs.insert(s, t);
      split.test_sources.erase(s);
    } else {
      split.gold_test.insert(s, t);
      split.test_targets.insert(t);
    }
  }
  for (auto u : split.test_sources.ids())
    if (!split.gold_test.has_source(u)) split.unmatchable_sources.push_back(u);
  return split;
}

namespace detail {

// P/R/F1 from found/correct/gold; P = 1 only when nothing was found and nothing was expected.
inline void finish_report(EvalReport& r, std::size_t unmatchable) {
  if (r.found == 0) {
    r.precision = r.gold == 0 ? 1.0 : 0.0;
  } else {
    r.precision = static_cast<double>(r.correct) / static_cast<double>(r.found);
    r.unmatchable_in_results = static_cast<double>(unmatchable) / static_cast<double>(r.found);
  }
  r.recall = r.gold == 0 ? 1.0 : static_cast<double>(r.correct) / static_cast<double>(r.gold);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

inline EvalReport score_pairs(const std::vector<std::pair<EntityId, EntityId>>& pairs, const OpenWorldSplit& split) {
  EvalReport r;
  r.found = pairs.size();
  r.gold = split.gold_test.size();
  std::size_t unmatchable = 0;
  for (const auto& [s, t] : pairs) {
    if (!split.test_sources.contains(s)) {
      throw DataError("result references source entity " + std::to_string(s.value) + " outside the test split");
    }
    if (!split.test_targets.contains(t)) {
      throw DataError("result references target entity " + std::to_string(t.value) + " outside the test split");
    }
    if (split.gold_test.contains(s, t)) ++r.correct;
    if (!split.gold_test.has_source(s)) ++unmatchable;
  }
  finish_report(r, unmatchable);
  return r;
}

}  // namespace detail

inline EvalReport score(const MatchResult& result, const OpenWorldSplit& split) {
  return detail::score_pairs(result.matches.pairs(), split);
}

inline EvalReport score(const RelaxedMatchResult& result, const OpenWorldSplit& split) {
  return detail::score_pairs(result.matches, split);
}

/// Scores a predictions file against gold pairs, both in original ids. A
/// predicted source counts as unmatchable when it is listed in `unmatchable`,
/// or, without that list, when it has no gold pair.
inline EvalReport score_predictions(const RawPredictions& pred,
                                    const std::vector<std::pair<std::int64_t, std::int64_t>>& gold,
                                    const std::vector<std::int64_t>* unmatchable = nullptr) {
  std::set<std::pair<std::int64_t, std::int64_t>> gold_set(gold.begin(), gold.end());
  std::set<std::int64_t> gold_sources;
  for (const auto& [s, t] : gold) gold_sources.insert(s);
  std::set<std::int64_t> unmatchable_set;
  if (unmatchable) unmatchable_set.insert(unmatchable->begin(), unmatchable->end());
  std::set<std::int64_t> seen_sources;
  EvalReport r;
  r.found = pred.matches.size();
  r.gold = gold_set.size();
  std::size_t unmatchable_found = 0;
  for (const auto& p : pred.matches) {
    if (!seen_sources.insert(p.first).second) throw DataError("predictions repeat source id " + std::to_string(p.first));
    if (gold_set.count(p)) ++r.correct;
    const bool no_partner = unmatchable ? unmatchable_set.count(p.first) > 0 : gold_sources.count(p.first) == 0;
    if (no_partner) ++unmatchable_found;
  }
  detail::finish_report(r, unmatchable_found);
  return r;
}

enum class AblationMode {
  kFull,
  kWithoutUnmatchable,
  kWithoutProgressive,
  kWithoutAdjustment,
  kWithoutExclusion,
  kStringOnly,
  kSemanticOnly,
  kStringDirect,
  kSemanticDirect,
  kNilThreshold,
};

inline constexpr AblationMode kAllAblationModes[] = {
    AblationMode::kFull,          AblationMode::kWithoutUnmatchable, AblationMode::kWithoutProgressive,
    AblationMode::kWithoutAdjustment, AblationMode::kWithoutExclusion, AblationMode::kStringOnly,
    AblationMode::kSemanticOnly,  AblationMode::kStringDirect,       AblationMode::kSemanticDirect,
    AblationMode::kNilThreshold};

inline std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kFull: return "full";
    case AblationMode::kWithoutUnmatchable: return "wo_unm";
    case AblationMode::kWithoutProgressive: return "wo_prg";
    case AblationMode::kWithoutAdjustment: return "wo_adj";
    case AblationMode::kWithoutExclusion: return "wo_excl";
    case AblationMode::kStringOnly: return "string_only";
    case AblationMode::kSemanticOnly: return "semantic_only";
    case AblationMode::kStringDirect: return "string_direct";
    case AblationMode::kSemanticDirect: return "semantic_direct";
    case AblationMode::kNilThreshold: return "u_th";
  }
  return "?";
}

inline AblationMode parse_ablation_mode(std::string_view name) {
  for (auto m : kAllAblationModes)
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown ablation mode '" + std::string(name) + "'");
}

/// Everything a pipeline variant needs. Matrices are borrowed.
struct AblationInputs {
  const KnowledgeGraph* source = nullptr;
  const KnowledgeGraph* target = nullptr;
  const DistanceMatrix* semantic = nullptr;
  const DistanceMatrix* string = nullptr;
  const OpenWorldSplit* split = nullptr;
  ProgressiveConfig progressive;
  GcnConfig gcn;
  double nil_theta = 0.45;
  std::size_t threads = 1;
};

/// Runs pipeline variants over shared inputs. The full pipeline's outcome
/// (including its final fused matrix) is cached because wo_unm and u_th
/// reuse it.
class AblationHarness {
 public:
  explicit AblationHarness(AblationInputs inputs) : in_(std::move(inputs)) {
    if (!in_.source || !in_.target || !in_.semantic || !in_.string || !in_.split) {
      throw InvalidArgument("ablation inputs are incomplete");
    }
    in_.progressive.validate();
  }

  const DistanceMatrix& textual() {
    if (!textual_) textual_ = fuse_textual(*in_.semantic, *in_.string, in_.progressive.alpha, in_.threads);
    return *textual_;
  }

  const ProgressiveOutcome& full_outcome() {
    if (!full_) full_ = pipeline(textual(), in_.progressive, true);
    return *full_;
  }

  EvalReport run(AblationMode mode) {
    EvalReport r = evaluate(mode);
    r.label = std::string(to_string(mode));
    return r;
  }

 private:
  ProgressiveOutcome pipeline(const DistanceMatrix& textual, const ProgressiveConfig& cfg, bool keep_matrix) const {
    ProgressiveOptions opts;
    opts.active_src = in_.split->test_sources;
    opts.active_tgt = in_.split->test_targets;
    opts.threads = in_.threads;
    opts.keep_final_matrix = keep_matrix;
    return kgalign::run(*in_.source, *in_.target, textual, cfg, in_.gcn, std::move(opts));
  }

  MatchResult direct(const DistanceMatrix& m) const {
    return tbnns(m, in_.split->test_sources, in_.split->test_targets, in_.progressive.theta0, in_.threads);
  }

  EvalReport evaluate(AblationMode mode) {
    const auto& split = *in_.split;
    switch (mode) {
      case AblationMode::kFull:
        return score(full_outcome().result, split);
      case AblationMode::kWithoutUnmatchable:
        return score(nearest_neighbor_assignment(*full_outcome().final_matrix, split.test_sources,
                                                 split.test_targets, in_.threads),
                     split);
      case AblationMode::kWithoutProgressive:
        return score(direct(textual()), split);
      case AblationMode::kWithoutAdjustment: {
        auto cfg = in_.progressive;
        cfg.adjust_threshold = false;
        return score(pipeline(textual(), cfg, false).result, split);
      }
      case AblationMode::kWithoutExclusion: {
        auto cfg = in_.progressive;
        cfg.exclude_matched = false;
        return score(pipeline(textual(), cfg, false).result, split);
      }
      case AblationMode::kStringOnly:
        return score(pipeline(*in_.string, in_.progressive, false).result, split);
      case AblationMode::kSemanticOnly:
        return score(pipeline(*in_.semantic, in_.progressive, false).result, split);
      case AblationMode::kStringDirect:
        return score(direct(*in_.string), split);
      case AblationMode::kSemanticDirect:
        return score(direct(*in_.semantic), split);
      case AblationMode::kNilThreshold:
        return score(nil_threshold_baseline(*full_outcome().final_matrix, split.test_sources, split.test_targets,
                                            in_.nil_theta, in_.threads),
                     split);
    }
    throw InvalidArgument("unhandled ablation mode");
  }

  AblationInputs in_;
  std::optional<DistanceMatrix> textual_;
  std::optional<ProgressiveOutcome> full_;
};

inline EvalReport run_ablation(AblationMode mode, const AblationInputs& inputs) {
  AblationHarness harness(inputs);
  return harness.run(mode);
}

/// Matches and errors after the first round when the whole run uses a single
/// fixed threshold (bootstrap included).
struct ThresholdPoint {
  double theta = 0.0;
  std::size_t matches = 0;
  std::size_t correct = 0;
  std::size_t wrong = 0;
};

inline std::vector<ThresholdPoint> first_round_sweep(const AblationInputs& in, const std::vector<double>& thetas) {
  AblationHarness harness(in);
  const auto& textual = harness.textual();
  std::vector<ThresholdPoint> out;
  for (double theta : thetas) {
    auto cfg = in.progressive;
    cfg.theta0 = theta;
    cfg.theta_cap = std::max(cfg.theta_cap, theta);
    cfg.adjust_threshold = false;
    cfg.max_rounds = 1;
    ProgressiveOptions opts;
    opts.active_src = in.split->test_sources;
    opts.active_tgt = in.split->test_targets;
    opts.threads = in.threads;
    ThresholdPoint p;
    p.theta = theta;
    try {
      const auto outcome = run(*in.source, *in.target, textual, cfg, in.gcn, std::move(opts));
      const auto r = score(outcome.result, *in.split);
      p.matches = r.found;
      p.correct = r.correct;
      p.wrong = r.found - r.correct;
    } catch (const DataError&) {
      // no seeds at this threshold: nothing matched
    }
    out.push_back(p);
  }
  return out;
}

inline std::string format_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "mode" << std::right << std::setw(10) << "P" << std::setw(10) << "R"
     << std::setw(10) << "F1" << std::setw(9) << "found" << std::setw(9) << "correct" << std::setw(9) << "gold"
     << std::setw(10) << "unm%" << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& r : reports) {
    os << std::left << std::setw(18) << r.label << std::right << std::setw(10) << r.precision << std::setw(10)
       << r.recall << std::setw(10) << r.f1 << std::setw(9) << r.found << std::setw(9) << r.correct << std::setw(9)
       << r.gold << std::setw(10) << 100.0 * r.unmatchable_in_results << '\n';
  }
  return os.str();
}

inline std::string format_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << "mode,precision,recall,f1,found,correct,gold,unmatchable_in_results\n";
  os << std::setprecision(6);
  for (const auto& r : reports) {
    os << r.label << ',' << r.precision << ',' << r.recall << ',' << r.f1 << ',' << r.found << ',' << r.correct
       << ',' << r.gold << ',' << r.unmatchable_in_results << '\n';
  }
  return os.str();
}

}  // namespace kgalign
