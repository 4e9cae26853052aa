#pragma once

#include <cctype>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg_model.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

/// Token -> d-dimensional vector lookup (fastText / word2vec text format).
class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }

  void add(std::string token, std::span<const float> vec) {
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) {
      throw DataError("vector for '" + token + "' has dimension " + std::to_string(vec.size()) + ", expected " +
                      std::to_string(dim_));
    }
    for (float x : vec) {
      if (!std::isfinite(x)) throw DataError("non-finite value in vector for '" + token + "'");
    }
    const auto [it, inserted] = index_.emplace(std::move(token), index_.size());
    if (!inserted) return;  // first occurrence wins
    data_.insert(data_.end(), vec.begin(), vec.end());
  }

  /// nullptr when the token is out of vocabulary.
  const float* find(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? nullptr : data_.data() + it->second * dim_;
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> data_;
};

/// Text format: one `token v1 ... vd` line per token, optionally preceded by
/// a `count dim` header line, which is detected automatically.
inline WordVectorTable load_word_vectors(std::istream& in) {
  WordVectorTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> vec;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(strip_cr(line));
    if (view.empty()) continue;
    std::istringstream fields{std::string(view)};
    std::string token;
    fields >> token;
    vec.clear();
    std::string num;
    while (fields >> num) {
      char* end = nullptr;
      const float x = std::strtof(num.c_str(), &end);
      if (end != num.c_str() + num.size()) {
        throw DataError("vectors line " + std::to_string(line_no) + ": malformed number '" + num + "'");
      }
      vec.push_back(x);
    }
    if (line_no == 1 && vec.size() == 1 && token.find_first_not_of("0123456789") == std::string::npos &&
        std::floor(vec[0]) == vec[0]) {
      continue;  // `count dim` header
    }
    if (vec.empty()) throw DataError("vectors line " + std::to_string(line_no) + ": token without values");
    try {
      table.add(std::move(token), vec);
    } catch (const DataError& e) {
      throw DataError("vectors line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (table.dim() == 0) throw DataError("word-vector file contains no vectors");
  return table;
}

/// Splits on whitespace and ASCII punctuation. Non-ASCII bytes are kept so
/// UTF-8 tokens stay intact.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct NameVectors {
  EmbeddingMatrix vectors;
  std::vector<EntityId> out_of_vocabulary;
};

/// Averages the vectors of in-vocabulary tokens of every entity name. A token
/// missing verbatim is retried lowercased. Names without any known token get
/// a zero row and are listed in `out_of_vocabulary`.
inline NameVectors name_semantic_vectors(const KnowledgeGraph& kg, const WordVectorTable& table) {
  if (table.dim() == 0) throw InvalidArgument("word-vector table is empty");
  NameVectors out{EmbeddingMatrix(kg.size(), table.dim()), {}};
  std::vector<double> acc(table.dim());
  for (std::size_t i = 0; i < kg.size(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t hits = 0;
    for (auto& tok : tokenize(kg.names()[i])) {
      const float* v = table.find(tok);
      if (!v) {
        std::string lower = tok;
        for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        v = table.find(lower);
      }
      if (!v) continue;
      ++hits;
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
    }
    if (hits == 0) {
      out.out_of_vocabulary.emplace_back(i);
      continue;
    }
    auto row = out.vectors.row(i);
    for (std::size_t k = 0; k < acc.size(); ++k) row[k] = static_cast<float>(acc[k] / static_cast<double>(hits));
  }
  if (!out.out_of_vocabulary.empty()) {
    log(LogLevel::kInfo, out.out_of_vocabulary.size(), " of ", kg.size(), " names have no in-vocabulary token");
  }
  return out;
}

/// Pre-computed name vectors: `entity_id v1 ... vd` per line, ids in the
/// graph's original id space. Entities without a line get a zero row.
inline NameVectors load_name_vectors(std::istream& in, const KnowledgeGraph& kg) {
  std::vector<std::vector<float>> rows(kg.size());
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(strip_cr(line));
    if (view.empty()) continue;
    std::istringstream fields{std::string(view)};
    std::string id_text;
    fields >> id_text;
    const auto id = detail::parse_id(id_text, line_no, "entity id");
    const auto dense = kg.find_original(id);
    if (!dense) throw DataError("name-vector line " + std::to_string(line_no) + ": unknown entity id " + id_text);
    std::vector<float> vec;
    float x;
    while (fields >> x) vec.push_back(x);
    if (!fields.eof()) throw DataError("name-vector line " + std::to_string(line_no) + ": malformed number");
    if (dim == 0) dim = vec.size();
    if (vec.empty() || vec.size() != dim) {
      throw DataError("name-vector line " + std::to_string(line_no) + ": inconsistent dimension");
    }
    rows[dense->index()] = std::move(vec);
  }
  if (dim == 0) throw DataError("name-vector file contains no vectors");
  NameVectors out{EmbeddingMatrix(kg.size(), dim), {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty()) {
      out.out_of_vocabulary.emplace_back(i);
      continue;
    }
    std::copy(rows[i].begin(), rows[i].end(), out.vectors.row(i).begin());
  }
  return out;
}

/// Semantic distance: 1 - cosine similarity of averaged name vectors.
inline DistanceMatrix semantic_distance(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                                        std::size_t threads = 1) {
  return cosine_distance(src, tgt, threads);
}

/// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c >> 4) == 0xE) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c >> 3) == 0x1E) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

/// Simple one-to-one lowercase mapping for Latin, Greek and Cyrillic.
inline char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;
  if (c >= 0x100 && c <= 0x17F && c % 2 == 0 && c != 0x130 && c != 0x138) return c + 1;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

inline std::u32string fold_case(std::u32string s) {
  for (auto& c : s) c = fold_case(c);
  return s;
}

/// Edit distance over code-point sequences with two rolling rows.
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(std::u32string_view(decode_utf8(a)), std::u32string_view(decode_utf8(b)));
}

/// String distance: edit distance normalised by the longer name, in [0, 1].
inline DistanceMatrix string_distance(const std::vector<std::string>& src_names,
                                      const std::vector<std::string>& tgt_names, bool casefold = true,
                                      std::size_t threads = 1) {
  auto prepare = [casefold](const std::vector<std::string>& names) {
    std::vector<std::u32string> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(casefold ? fold_case(decode_utf8(n)) : decode_utf8(n));
    return out;
  };
  const auto src = prepare(src_names);
  const auto tgt = prepare(tgt_names);
  DistanceMatrix out(src.size(), tgt.size());
  parallel_for(src.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      for (std::size_t v = 0; v < tgt.size(); ++v) {
        const std::size_t longest = std::max<std::size_t>({src[u].size(), tgt[v].size(), 1});
        out(u, v) = static_cast<float>(static_cast<double>(levenshtein(src[u], tgt[v])) /
                                       static_cast<double>(longest));
      }
    }
  });
  return out;
}

/// Textual distance: alpha * semantic + (1 - alpha) * string.
inline DistanceMatrix fuse_textual(const DistanceMatrix& semantic, const DistanceMatrix& string, double alpha,
                                   std::size_t threads = 1) {
  return convex_combine(semantic, string, alpha, threads);
}

}  // namespace kgalign
