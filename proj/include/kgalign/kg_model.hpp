#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign {

/// Dense position of an entity inside one knowledge graph (0..n-1).
struct EntityId {
  std::uint32_t value = 0;

  constexpr EntityId() = default;
  constexpr explicit EntityId(std::uint32_t v) : value(v) {}
  constexpr explicit EntityId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr explicit EntityId(int v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const { return value; }
  friend constexpr auto operator<=>(EntityId, EntityId) = default;
};

inline std::ostream& operator<<(std::ostream& os, EntityId id) { return os << id.value; }

using RelationId = std::uint32_t;

struct Triple {
  EntityId head;
  RelationId relation = 0;
  EntityId tail;
  friend constexpr auto operator<=>(const Triple&, const Triple&) = default;
};

/// One knowledge graph with densely re-indexed entities. `original_ids`
/// keeps the identifiers used by the input files so results can be written
/// back in the same id space.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Builds a graph from already-dense data. Throws DataError if a triple
  /// endpoint is out of range; duplicate triples are dropped.
  KnowledgeGraph(std::vector<std::string> names, std::vector<Triple> triples,
                 std::vector<std::int64_t> original_ids = {})
      : names_(std::move(names)), original_ids_(std::move(original_ids)) {
    if (original_ids_.empty()) {
      original_ids_.resize(names_.size());
      for (std::size_t i = 0; i < names_.size(); ++i) original_ids_[i] = static_cast<std::int64_t>(i);
    }
    if (original_ids_.size() != names_.size()) {
      throw InvalidArgument("original id table size does not match entity count");
    }
    for (std::size_t i = 0; i < original_ids_.size(); ++i) {
      if (!dense_of_.emplace(original_ids_[i], EntityId(i)).second) {
        throw DataError("duplicate original entity id " + std::to_string(original_ids_[i]));
      }
    }
    std::set<Triple> seen;
    triples_.reserve(triples.size());
    for (const auto& t : triples) {
      if (t.head.index() >= names_.size() || t.tail.index() >= names_.size()) {
        throw DataError("triple references unknown entity id");
      }
      if (seen.insert(t).second) {
        triples_.push_back(t);
      } else {
        ++duplicate_triples_;
      }
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(EntityId e) const { return names_.at(e.index()); }
  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<std::int64_t>& original_ids() const { return original_ids_; }
  std::int64_t original_id(EntityId e) const { return original_ids_.at(e.index()); }

  std::optional<EntityId> find_original(std::int64_t original) const {
    const auto it = dense_of_.find(original);
    if (it == dense_of_.end()) return std::nullopt;
    return it->second;
  }

  /// Number of duplicate triples dropped at construction.
  std::size_t duplicate_triples() const { return duplicate_triples_; }

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    return a.names_ == b.names_ && a.triples_ == b.triples_ && a.original_ids_ == b.original_ids_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Triple> triples_;
  std::vector<std::int64_t> original_ids_;
  std::unordered_map<std::int64_t, EntityId> dense_of_;
  std::size_t duplicate_triples_ = 0;
};

/// 1-to-1 partial mapping between source and target entities. Insertion of a
/// pair that reuses a source or a target is refused.
class AlignmentSet {
 public:
  using Pair = std::pair<EntityId, EntityId>;

  AlignmentSet() = default;

  /// Returns false (and leaves the set unchanged) when `source` or `target`
  /// is already aligned. Re-inserting an existing pair also returns false.
  bool try_insert(EntityId source, EntityId target) {
    if (by_source_.count(source) || by_target_.count(target)) return false;
    by_source_.emplace(source, target);
    by_target_.emplace(target, source);
    return true;
  }

  /// Like try_insert but throws DataError naming the offending id.
  void insert(EntityId source, EntityId target) {
    if (by_source_.count(source)) {
      throw DataError("duplicate source id " + std::to_string(source.value));
    }
    if (by_target_.count(target)) {
      throw DataError("duplicate target id " + std::to_string(target.value));
    }
    try_insert(source, target);
  }

  bool contains(EntityId source, EntityId target) const {
    const auto it = by_source_.find(source);
    return it != by_source_.end() && it->second == target;
  }
  bool has_source(EntityId s) const { return by_source_.count(s) != 0; }
  bool has_target(EntityId t) const { return by_target_.count(t) != 0; }

  std::optional<EntityId> target_of(EntityId s) const {
    const auto it = by_source_.find(s);
    if (it == by_source_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<EntityId> source_of(EntityId t) const {
    const auto it = by_target_.find(t);
    if (it == by_target_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return by_source_.size(); }
  bool empty() const { return by_source_.empty(); }

  /// Pairs in ascending source order.
  std::vector<Pair> pairs() const { return {by_source_.begin(), by_source_.end()}; }
  auto begin() const { return by_source_.begin(); }
  auto end() const { return by_source_.end(); }

  friend bool operator==(const AlignmentSet& a, const AlignmentSet& b) {
    return a.by_source_ == b.by_source_;
  }

 private:
  std::map<EntityId, EntityId> by_source_;
  std::map<EntityId, EntityId> by_target_;
};

/// Diagnostics collected while loading a graph.
struct LoadReport {
  std::size_t duplicate_triples = 0;
  std::vector<EntityId> missing_names;
};

namespace detail {

inline std::int64_t parse_id(std::string_view field, std::size_t line_no, std::string_view what) {
  field = trim(field);
  std::int64_t value = 0;
  std::size_t pos = 0;
  try {
    value = std::stoll(std::string(field), &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (field.empty() || pos != field.size() || value < 0) {
    throw DataError("line " + std::to_string(line_no) + ": malformed " + std::string(what) + " '" +
                    std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

/// Reads `entity_id \t name` lines and `head \t relation \t tail` lines.
/// Entities are numbered in the order they appear in the names source.
inline KnowledgeGraph load_kg(std::istream& triples_in, std::istream& names_in,
                              LoadReport* report = nullptr) {
  std::vector<std::string> names;
  std::vector<std::int64_t> original_ids;
  std::unordered_map<std::int64_t, std::size_t> dense;
  std::vector<EntityId> missing;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(names_in, line)) {
    ++line_no;
    const auto view = strip_cr(line);
    if (trim(view).empty()) continue;
    const auto tab = view.find('\t');
    const auto id_field = tab == std::string_view::npos ? view : view.substr(0, tab);
    const auto name = tab == std::string_view::npos ? std::string_view{} : view.substr(tab + 1);
    const auto id = detail::parse_id(id_field, line_no, "entity id");
    if (!dense.emplace(id, names.size()).second) {
      throw DataError("names line " + std::to_string(line_no) + ": duplicate name line for entity id " +
                      std::to_string(id));
    }
    if (name.empty()) {
      missing.emplace_back(names.size());
      log(LogLevel::kWarn, "entity ", id, " has no name; using the empty string");
    }
    names.emplace_back(name);
    original_ids.push_back(id);
  }

  std::vector<Triple> triples;
  line_no = 0;
  while (std::getline(triples_in, line)) {
    ++line_no;
    const auto view = strip_cr(line);
    if (trim(view).empty()) continue;
    const auto fields = split_tabs(view);
    if (fields.size() != 3) {
      throw DataError("triples line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    const auto head = detail::parse_id(fields[0], line_no, "head id");
    const auto rel = detail::parse_id(fields[1], line_no, "relation id");
    const auto tail = detail::parse_id(fields[2], line_no, "tail id");
    const auto h = dense.find(head);
    const auto t = dense.find(tail);
    if (h == dense.end() || t == dense.end()) {
      throw DataError("triples line " + std::to_string(line_no) + ": unknown entity id " +
                      std::to_string(h == dense.end() ? head : tail));
    }
    triples.push_back(Triple{EntityId(h->second), static_cast<RelationId>(rel), EntityId(t->second)});
  }

  KnowledgeGraph kg(std::move(names), std::move(triples), std::move(original_ids));
  if (kg.duplicate_triples() > 0) {
    log(LogLevel::kInfo, "dropped ", kg.duplicate_triples(), " duplicate triples");
  }
  if (report) {
    report->duplicate_triples = kg.duplicate_triples();
    report->missing_names = std::move(missing);
  }
  return kg;
}

/// Writes the graph back in the input formats, using original ids.
inline void write_kg(const KnowledgeGraph& kg, std::ostream& triples_out, std::ostream& names_out) {
  for (std::size_t i = 0; i < kg.size(); ++i) {
    names_out << kg.original_ids()[i] << '\t' << kg.names()[i] << '\n';
  }
  for (const auto& t : kg.triples()) {
    triples_out << kg.original_id(t.head) << '\t' << t.relation << '\t' << kg.original_id(t.tail) << '\n';
  }
}

/// Reads `source_id \t target_id` lines verbatim (no id remapping).
inline AlignmentSet load_alignment(std::istream& in) {
  AlignmentSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = strip_cr(line);
    if (trim(view).empty()) continue;
    const auto fields = split_tabs(view);
    if (fields.size() != 2) {
      throw DataError("alignment line " + std::to_string(line_no) + ": expected 2 tab-separated fields");
    }
    const auto s = detail::parse_id(fields[0], line_no, "source id");
    const auto t = detail::parse_id(fields[1], line_no, "target id");
    try {
      out.insert(EntityId(static_cast<std::uint32_t>(s)), EntityId(static_cast<std::uint32_t>(t)));
    } catch (const DataError& e) {
      throw DataError("alignment line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Reads alignment lines written in the original id spaces of `source` and
/// `target` and maps them to dense ids.
inline AlignmentSet load_alignment(std::istream& in, const KnowledgeGraph& source,
                                   const KnowledgeGraph& target) {
  AlignmentSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = strip_cr(line);
    if (trim(view).empty()) continue;
    const auto fields = split_tabs(view);
    if (fields.size() != 2) {
      throw DataError("alignment line " + std::to_string(line_no) + ": expected 2 tab-separated fields");
    }
    const auto s = detail::parse_id(fields[0], line_no, "source id");
    const auto t = detail::parse_id(fields[1], line_no, "target id");
    const auto ds = source.find_original(s);
    const auto dt = target.find_original(t);
    if (!ds) throw DataError("alignment line " + std::to_string(line_no) + ": unknown source entity id " + std::to_string(s));
    if (!dt) throw DataError("alignment line " + std::to_string(line_no) + ": unknown target entity id " + std::to_string(t));
    if (out.has_source(*ds)) {
      throw DataError("alignment line " + std::to_string(line_no) + ": duplicate source id " + std::to_string(s));
    }
    if (out.has_target(*dt)) {
      throw DataError("alignment line " + std::to_string(line_no) + ": duplicate target id " + std::to_string(t));
    }
    out.insert(*ds, *dt);
  }
  return out;
}

inline void write_alignment(const AlignmentSet& set, const KnowledgeGraph& source,
                            const KnowledgeGraph& target, std::ostream& out) {
  for (const auto& [s, t] : set) {
    out << source.original_id(s) << '\t' << target.original_id(t) << '\n';
  }
}

/// DBP15K names are resource URIs; keep the last path segment with
/// underscores turned into spaces. Plain names pass through unchanged.
inline std::string display_name_from_uri(std::string_view raw) {
  if (raw.find("://") == std::string_view::npos) return std::string(raw);
  const auto slash = raw.find_last_of('/');
  std::string tail(raw.substr(slash == std::string_view::npos ? 0 : slash + 1));
  std::replace(tail.begin(), tail.end(), '_', ' ');
  return tail;
}

}  // namespace kgalign

template <>
struct std::hash<kgalign::EntityId> {
  std::size_t operator()(kgalign::EntityId e) const noexcept { return std::hash<std::uint32_t>{}(e.value); }
};
