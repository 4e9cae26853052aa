#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kgalign/common.hpp"
#include "kgalign/progressive.hpp"
#include "kgalign/struct_embed.hpp"

namespace kgalign {

/// Everything a CLI run needs.
struct RunConfig {
  std::string data_dir;
  std::string vectors;
  std::string name_vectors_src;
  std::string name_vectors_tgt;
  std::string out_dir;
  std::string gold;
  std::string log_level = "info";
  std::size_t threads = 1;
  bool casefold = true;
  double nil_theta = 0.45;
  double train_fraction = 0.3;
  std::uint64_t split_seed = 2021;
  ProgressiveConfig progressive;
  GcnConfig gcn;

  void validate() const {
    parse_log_level(log_level);
    if (threads == 0) throw InvalidArgument("threads must be positive");
    if (!(train_fraction >= 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must lie in [0, 1)");
    progressive.validate();
    gcn.validate();
  }
};

namespace detail {

// size_t and uint64_t coincide on some platforms; a variant cannot hold the same type twice.
struct NoSeparateU64 {};
using U64Ref = std::conditional_t<std::is_same_v<std::size_t, std::uint64_t>, NoSeparateU64*, std::uint64_t*>;
using FieldRef = std::variant<double*, std::size_t*, U64Ref, bool*, std::string*>;

struct Field {
  const char* key;
  FieldRef ref;
};

// One table drives the config file, the CLI flags and the manifest.
inline std::vector<Field> config_fields(RunConfig& c) {
  return {
      {"data", &c.data_dir},
      {"vectors", &c.vectors},
      {"name_vectors_src", &c.name_vectors_src},
      {"name_vectors_tgt", &c.name_vectors_tgt},
      {"out", &c.out_dir},
      {"gold", &c.gold},
      {"log_level", &c.log_level},
      {"threads", &c.threads},
      {"casefold", &c.casefold},
      {"nil_theta", &c.nil_theta},
      {"train_fraction", &c.train_fraction},
      {"split_seed", &c.split_seed},
      {"theta0", &c.progressive.theta0},
      {"eta", &c.progressive.eta},
      {"theta_cap", &c.progressive.theta_cap},
      {"gamma", &c.progressive.gamma},
      {"alpha", &c.progressive.alpha},
      {"beta", &c.progressive.beta},
      {"exclude_matched", &c.progressive.exclude_matched},
      {"adjust_threshold", &c.progressive.adjust_threshold},
      {"warm_start", &c.progressive.warm_start},
      {"max_rounds", &c.progressive.max_rounds},
      {"gcn_layers", &c.gcn.layers},
      {"hidden_dim", &c.gcn.hidden_dim},
      {"output_dim", &c.gcn.output_dim},
      {"negatives", &c.gcn.negatives_per_positive},
      {"margin", &c.gcn.margin},
      {"epochs", &c.gcn.epochs},
      {"learning_rate", &c.gcn.learning_rate},
      {"seed", &c.gcn.seed},
  };
}

inline Field& find_field(std::vector<Field>& fields, std::string_view key) {
  for (auto& f : fields)
    if (key == f.key) return f;
  throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

inline void assign_json(const Field& f, const nlohmann::json& v) {
  const std::string key = f.key;
  auto fail = [&key](const char* want) { throw InvalidArgument("config key '" + key + "' expects " + want); };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) fail("a boolean");
          *p = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (!v.is_string()) fail("a string");
          *p = v.get<std::string>();
        } else if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) fail("a number");
          *p = v.get<double>();
        } else if constexpr (std::is_unsigned_v<T>) {
          if (!v.is_number_unsigned()) fail("a non-negative integer");
          *p = v.get<T>();
        }
      },
      f.ref);
}

inline void assign_text(const Field& f, const std::string& text) {
  const std::string key = f.key;
  auto fail = [&](const char* want) {
    throw InvalidArgument("value '" + text + "' for '" + key + "' is not " + want);
  };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1" || text == "on") {
            *p = true;
          } else if (text == "false" || text == "0" || text == "off") {
            *p = false;
          } else {
            fail("a boolean");
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          *p = text;
        } else if constexpr (std::is_same_v<T, double>) {
          std::size_t used = 0;
          try {
            *p = std::stod(text, &used);
          } catch (const std::exception&) {
            fail("a number");
          }
          if (used != text.size()) fail("a number");
        } else if constexpr (std::is_unsigned_v<T>) {
          if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
            fail("a non-negative integer");
          }
          try {
            *p = static_cast<T>(std::stoull(text));
          } catch (const std::exception&) {
            fail("a non-negative integer");
          }
        }
      },
      f.ref);
}

}  // namespace detail

/// Names of all recognised keys, in table order.
inline std::vector<std::string> config_keys() {
  RunConfig scratch;
  std::vector<std::string> out;
  for (const auto& f : detail::config_fields(scratch)) out.emplace_back(f.key);
  return out;
}

/// Applies a JSON object on top of `base`. Unknown keys are rejected.
inline RunConfig load_config(std::string_view json_text, RunConfig base = {}) {
  if (trim(json_text).empty()) return base;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (j.is_null()) return base;
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  auto fields = detail::config_fields(base);
  for (const auto& [key, value] : j.items()) detail::assign_json(detail::find_field(fields, key), value);
  return base;
}

/// Applies textual key=value overrides (CLI flags) on top of `base`.
inline RunConfig apply_overrides(RunConfig base, const std::map<std::string, std::string>& overrides) {
  auto fields = detail::config_fields(base);
  for (const auto& [key, value] : overrides) detail::assign_text(detail::find_field(fields, key), value);
  return base;
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  RunConfig copy = cfg;
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : detail::config_fields(copy)) {
    std::visit(
        [&](auto* p) {
          if constexpr (!std::is_same_v<decltype(p), detail::NoSeparateU64*>) j[f.key] = *p;
        },
        f.ref);
  }
  return j;
}

}  // namespace kgalign
