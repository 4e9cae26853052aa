#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg_model.hpp"
#include "kgalign/side_features.hpp"

namespace kgalign {

struct SynthConfig {
  std::size_t n_entities = 1000;
  std::size_t n_relations = 20;
  double avg_degree = 6.0;
  double name_noise = 0.0;            // per-character edit probability in KG2 names
  double unmatchable_fraction = 0.0;  // share of KG1 entities missing from KG2
  double structure_noise = 0.0;       // share of KG2 triples with a rewired endpoint
  std::uint64_t seed = 7;
  std::size_t vocabulary_size = 0;  // 0 = max(50, 3 * n_entities / 10)
  std::size_t min_tokens = 2;
  std::size_t max_tokens = 3;
  std::size_t vector_dim = 32;

  void validate() const {
    if (n_entities < 2) throw InvalidArgument("n_entities must be >= 2");
    if (n_relations == 0) throw InvalidArgument("n_relations must be positive");
    if (!(avg_degree >= 0.0)) throw InvalidArgument("avg_degree must be non-negative");
    if (!(name_noise >= 0.0 && name_noise <= 1.0)) throw InvalidArgument("name_noise must lie in [0, 1]");
    if (!(unmatchable_fraction >= 0.0 && unmatchable_fraction < 1.0)) {
      throw InvalidArgument("unmatchable_fraction must lie in [0, 1)");
    }
    if (!(structure_noise >= 0.0 && structure_noise <= 1.0)) throw InvalidArgument("structure_noise must lie in [0, 1]");
    if (min_tokens == 0 || max_tokens < min_tokens) throw InvalidArgument("invalid token count range");
    if (vector_dim == 0) throw InvalidArgument("vector_dim must be positive");
  }
};

struct SynthDataset {
  KnowledgeGraph source;
  KnowledgeGraph target;
  AlignmentSet gold;
  std::vector<EntityId> unmatchable_sources;
  std::vector<std::string> vocabulary;
};

namespace detail {

template <typename Engine>
char random_letter(Engine& rng) {
  return static_cast<char>('a' + uniform_index(rng, 26));
}

template <typename Engine>
std::string perturb_name(const std::string& name, double rate, Engine& rng) {
  if (rate <= 0.0) return name;
  std::string out;
  out.reserve(name.size() + 4);
  for (char c : name) {
    if (c == ' ' || uniform01(rng) >= rate) {
      out.push_back(c);
      continue;
    }
    switch (uniform_index(rng, 3)) {
      case 0: {  // substitute
        char r;
        do r = random_letter(rng);
        while (r == c);
        out.push_back(r);
        break;
      }
      case 1:  // delete
        break;
      default:  // insert before
        out.push_back(random_letter(rng));
        out.push_back(c);
        break;
    }
  }
  return out;
}

}  // namespace detail

/// KG1 is grown by preferential attachment with names drawn from a token
/// vocabulary. KG2 copies KG1 minus the unmatchable entities, with noisy
/// names and a share of rewired triples. Surviving entities keep their
/// relative order, so gold maps each to its copy.
inline SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const std::size_t n = cfg.n_entities;
  SynthDataset out;

  const std::size_t vocab_size =
      cfg.vocabulary_size == 0 ? std::max<std::size_t>(50, 3 * n / 10) : cfg.vocabulary_size;
  std::unordered_set<std::string> seen_tokens;
  while (out.vocabulary.size() < vocab_size) {
    std::string tok;
    const std::size_t len = 3 + uniform_index(rng, 6);
    for (std::size_t i = 0; i < len; ++i) tok.push_back(detail::random_letter(rng));
    if (seen_tokens.insert(tok).second) out.vocabulary.push_back(std::move(tok));
  }

  std::vector<std::string> names;
  std::unordered_set<std::string> seen_names;
  while (names.size() < n) {
    const std::size_t k = cfg.min_tokens + uniform_index(rng, cfg.max_tokens - cfg.min_tokens + 1);
    std::string name;
    for (std::size_t i = 0; i < k; ++i) {
      if (i) name.push_back(' ');
      name += out.vocabulary[uniform_index(rng, out.vocabulary.size())];
    }
    if (seen_names.insert(name).second) names.push_back(std::move(name));
  }

  // Preferential attachment: `pool` holds each node (degree + 1) times.
  std::vector<Triple> triples;
  std::vector<std::uint32_t> pool{0};
  const double per_node = cfg.avg_degree / 2.0;
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t m = static_cast<std::size_t>(std::floor(per_node));
    if (uniform01(rng) < per_node - std::floor(per_node)) ++m;
    m = std::min(m, i);
    std::unordered_set<std::uint32_t> chosen;
    std::size_t attempts = 0;
    while (chosen.size() < m && attempts++ < 50 * m) chosen.insert(pool[uniform_index(rng, pool.size())]);
    std::vector<std::uint32_t> ordered(chosen.begin(), chosen.end());
    std::sort(ordered.begin(), ordered.end());
    for (auto j : ordered) {
      const auto rel = static_cast<RelationId>(uniform_index(rng, cfg.n_relations));
      if (rng() & 1u) {
        triples.push_back({EntityId(i), rel, EntityId(j)});
      } else {
        triples.push_back({EntityId(j), rel, EntityId(i)});
      }
      pool.push_back(j);
      pool.push_back(static_cast<std::uint32_t>(i));
    }
    pool.push_back(static_cast<std::uint32_t>(i));
  }

  // Unmatchable entities.
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  shuffle(rng, order);
  const auto removed_count = static_cast<std::size_t>(std::llround(cfg.unmatchable_fraction * static_cast<double>(n)));
  std::vector<bool> removed(n, false);
  for (std::size_t i = 0; i < removed_count; ++i) removed[order[i]] = true;

  std::vector<std::int64_t> copy_of(n, -1);
  std::vector<std::string> target_names;
  std::vector<std::int64_t> target_original;
  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i]) {
      out.unmatchable_sources.emplace_back(i);
      continue;
    }
    copy_of[i] = static_cast<std::int64_t>(target_names.size());
    target_names.push_back(detail::perturb_name(names[i], cfg.name_noise, rng));
    target_original.push_back(static_cast<std::int64_t>(n + target_names.size() - 1));
  }
  const std::size_t n2 = target_names.size();

  std::vector<Triple> target_triples;
  for (const auto& t : triples) {
    const auto h = copy_of[t.head.index()];
    const auto tl = copy_of[t.tail.index()];
    if (h < 0 || tl < 0) continue;
    Triple copy{EntityId(static_cast<std::size_t>(h)), t.relation, EntityId(static_cast<std::size_t>(tl))};
    if (n2 > 2 && uniform01(rng) < cfg.structure_noise) {
      const bool rewire_head = (rng() & 1u) != 0;
      EntityId& moved = rewire_head ? copy.head : copy.tail;
      const EntityId fixed = rewire_head ? copy.tail : copy.head;
      std::size_t r;
      do r = uniform_index(rng, n2);
      while (r == fixed.index() || r == moved.index());
      moved = EntityId(r);
    }
    target_triples.push_back(copy);
  }

  std::vector<std::int64_t> source_original(n);
  for (std::size_t i = 0; i < n; ++i) source_original[i] = static_cast<std::int64_t>(i);
  out.source = KnowledgeGraph(std::move(names), std::move(triples), std::move(source_original));
  out.target = KnowledgeGraph(std::move(target_names), std::move(target_triples), std::move(target_original));
  for (std::size_t i = 0; i < n; ++i) {
    if (copy_of[i] >= 0) out.gold.insert(EntityId(i), EntityId(static_cast<std::size_t>(copy_of[i])));
  }
  return out;
}

/// Random unit vector per vocabulary token, deterministic in `seed`.
inline WordVectorTable synthetic_word_vectors(const std::vector<std::string>& vocabulary, std::size_t dim,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
  WordVectorTable table(dim);
  std::vector<float> v(dim);
  for (const auto& tok : vocabulary) {
    double sq = 0.0;
    for (auto& x : v) {
      // Box-Muller keeps directions isotropic.
      const double u1 = std::max(uniform01(rng), 1e-300);
      const double u2 = uniform01(rng);
      x = static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2));
      sq += static_cast<double>(x) * x;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x = static_cast<float>(x * inv);
    table.add(tok, v);
  }
  return table;
}

/// Writes the DBP15K-style file set plus gold.tsv, unmatchable.tsv and
/// vectors.txt (word vectors for the synthetic vocabulary).
inline void write_dataset(const SynthDataset& data, const WordVectorTable& vectors,
                          const std::vector<std::string>& vocabulary, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw DataError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto t1 = open("triples_1");
    auto e1 = open("ent_ids_1");
    write_kg(data.source, t1, e1);
    auto t2 = open("triples_2");
    auto e2 = open("ent_ids_2");
    write_kg(data.target, t2, e2);
  }
  {
    auto ref = open("ref_ent_ids");
    write_alignment(data.gold, data.source, data.target, ref);
    auto gold = open("gold.tsv");
    write_alignment(data.gold, data.source, data.target, gold);
  }
  {
    auto un = open("unmatchable.tsv");
    for (auto u : data.unmatchable_sources) un << data.source.original_id(u) << '\n';
  }
  auto vec = open("vectors.txt");
  vec << vocabulary.size() << ' ' << vectors.dim() << '\n';
  vec.precision(9);
  for (const auto& tok : vocabulary) {
    const float* v = vectors.find(tok);
    vec << tok;
    for (std::size_t k = 0; k < vectors.dim(); ++k) vec << ' ' << v[k];
    vec << '\n';
  }
}

}  // namespace kgalign
