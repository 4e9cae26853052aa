// kgalign command-line driver: align, evaluate, ablate, synth.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/config.hpp"
#include "kgalign/evaluation.hpp"
#include "kgalign/kg_model.hpp"
#include "kgalign/matcher.hpp"
#include "kgalign/progressive.hpp"
#include "kgalign/side_features.hpp"
#include "kgalign/struct_embed.hpp"
#include "kgalign/synth.hpp"

namespace fs = std::filesystem;
using namespace kgalign;

namespace {

constexpr const char* kVersion = "0.1.0";

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string read_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Tunable keys get one flag each (theta_cap -> --theta-cap). Paths and the
// two switch-style booleans have dedicated flags.
bool has_dedicated_flag(const std::string& key) {
  return key == "data" || key == "vectors" || key == "name_vectors_src" || key == "name_vectors_tgt" ||
         key == "out" || key == "gold" || key == "warm_start" || key == "casefold";
}

void add_tunables(CLI::App* sub, std::map<std::string, std::string>& overrides) {
  for (const auto& key : config_keys()) {
    if (has_dedicated_flag(key)) continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    sub->add_option_function<std::string>(
           flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, "override config key " + key)
        ->group("Tuning");
  }
}

struct CommonInputs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::string data, vectors, nv_src, nv_tgt, gold;
  bool no_casefold = false;
  bool warm_start = false;
};

void add_data_options(CLI::App* sub, CommonInputs& in) {
  sub->add_option("--data", in.data, "dataset directory (triples_1, ent_ids_1, triples_2, ent_ids_2)")->required();
  sub->add_option("--vectors", in.vectors, "word-vector text file");
  sub->add_option("--name-vectors-src", in.nv_src, "pre-computed source name vectors (id v1 .. vd)");
  sub->add_option("--name-vectors-tgt", in.nv_tgt, "pre-computed target name vectors");
  sub->add_option("--config", in.config_path, "JSON config file");
  sub->add_flag("--no-casefold", in.no_casefold, "compare names case-sensitively");
  sub->add_flag("--warm-start", in.warm_start, "keep encoder weights between rounds");
  add_tunables(sub, in.overrides);
}

RunConfig resolve(CommonInputs& in, const std::string& out_dir) {
  RunConfig cfg = in.config_path.empty() ? RunConfig{} : load_config(read_file(in.config_path));
  auto put = [&in](const char* key, const std::string& v) {
    if (!v.empty()) in.overrides[key] = v;
  };
  put("data", in.data);
  put("vectors", in.vectors);
  put("name_vectors_src", in.nv_src);
  put("name_vectors_tgt", in.nv_tgt);
  put("gold", in.gold);
  put("out", out_dir);
  if (in.no_casefold) in.overrides["casefold"] = "false";
  if (in.warm_start) in.overrides["warm_start"] = "true";
  cfg = apply_overrides(cfg, in.overrides);
  cfg.validate();
  set_log_level(parse_log_level(cfg.log_level));
  return cfg;
}

KnowledgeGraph load_side(const fs::path& dir, const char* triples, const char* names) {
  auto t = open_input((dir / triples).string());
  auto n = open_input((dir / names).string());
  LoadReport report;
  auto kg = load_kg(t, n, &report);
  if (report.duplicate_triples) kgalign::log(LogLevel::kInfo, triples, ": dropped ", report.duplicate_triples, " duplicate triples");
  std::vector<std::string> display;
  display.reserve(kg.size());
  for (const auto& name : kg.names()) display.push_back(display_name_from_uri(name));
  return KnowledgeGraph(std::move(display), kg.triples(), kg.original_ids());
}

struct Dataset {
  KnowledgeGraph source, target;
};

Dataset load_dataset(const RunConfig& cfg) {
  const fs::path dir = cfg.data_dir;
  Dataset d{load_side(dir, "triples_1", "ent_ids_1"), load_side(dir, "triples_2", "ent_ids_2")};
  kgalign::log(LogLevel::kInfo, "loaded ", d.source.size(), " + ", d.target.size(), " entities, ", d.source.triples().size(),
      " + ", d.target.triples().size(), " triples");
  return d;
}

DistanceMatrix semantic_matrix(const RunConfig& cfg, const Dataset& d) {
  NameVectors src, tgt;
  if (!cfg.vectors.empty()) {
    auto in = open_input(cfg.vectors);
    const auto table = load_word_vectors(in);
    kgalign::log(LogLevel::kInfo, "word vectors: ", table.size(), " tokens, dim ", table.dim());
    src = name_semantic_vectors(d.source, table);
    tgt = name_semantic_vectors(d.target, table);
  } else if (!cfg.name_vectors_src.empty() && !cfg.name_vectors_tgt.empty()) {
    auto a = open_input(cfg.name_vectors_src);
    auto b = open_input(cfg.name_vectors_tgt);
    src = load_name_vectors(a, d.source);
    tgt = load_name_vectors(b, d.target);
  } else {
    throw InvalidArgument("need --vectors, or both --name-vectors-src and --name-vectors-tgt");
  }
  if (!src.out_of_vocabulary.empty() || !tgt.out_of_vocabulary.empty()) {
    kgalign::log(LogLevel::kWarn, "names without any vector: ", src.out_of_vocabulary.size(), " source, ",
        tgt.out_of_vocabulary.size(), " target");
  }
  return semantic_distance(src.vectors, tgt.vectors, cfg.threads);
}

DistanceMatrix string_matrix(const RunConfig& cfg, const Dataset& d) {
  return string_distance(d.source.names(), d.target.names(), cfg.casefold, cfg.threads);
}

OpenWorldSplit load_split(const RunConfig& cfg, const Dataset& d) {
  auto in = open_input(cfg.gold);
  const auto gold = load_alignment(in, d.source, d.target);
  auto split = build_split(d.source, d.target, gold, cfg.train_fraction, cfg.split_seed);
  kgalign::log(LogLevel::kInfo, "split: ", split.train_pairs.size(), " held-out pairs, ", split.test_sources.count(),
      " test sources, ", split.test_targets.count(), " test targets");
  return split;
}

nlohmann::json manifest(const RunConfig& cfg, const std::vector<std::string>& argv, const Dataset* d) {
  nlohmann::json j;
  j["tool"] = "kgalign";
  j["version"] = kVersion;
  j["command"] = argv;
  j["config"] = to_json(cfg);
  j["seeds"] = {{"gcn", cfg.gcn.seed}, {"split", cfg.split_seed}};
  j["build"] = {{"compiler", __VERSION__},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"cxx_standard", __cplusplus}};
  if (d) {
    j["inputs"] = {{"source_entities", d->source.size()},
                   {"target_entities", d->target.size()},
                   {"source_triples", d->source.triples().size()},
                   {"target_triples", d->target.triples().size()}};
  }
  return j;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

int cmd_align(CommonInputs& in, const std::string& out_dir, const std::string& dump_path, const std::string& load_path, const std::vector<std::string>& argv) {
  const RunConfig cfg = resolve(in, out_dir);
  const auto d = load_dataset(cfg);
  fs::create_directories(out_dir);
  write_json(fs::path(out_dir) / "manifest.json", manifest(cfg, argv, &d));

  const auto textual = fuse_textual(semantic_matrix(cfg, d), string_matrix(cfg, d), cfg.progressive.alpha, cfg.threads);

  ProgressiveOptions opts;
  opts.threads = cfg.threads;
  std::optional<OpenWorldSplit> split;
  if (!cfg.gold.empty()) {
    split = load_split(cfg, d);
    opts.active_src = split->test_sources;
    opts.active_tgt = split->test_targets;
  }
  if (!load_path.empty()) {
    auto f = open_input(load_path, std::ios::binary);
    auto emb = load_embeddings(f);
    if (emb.rows() != d.source.size() + d.target.size()) {
      throw DataError(load_path + ": checkpoint has " + std::to_string(emb.rows()) + " rows, dataset has " +
                      std::to_string(d.source.size() + d.target.size()) + " entities");
    }
    opts.initial_embeddings = std::move(emb);
  }
  auto rounds = open_output(fs::path(out_dir) / "rounds.jsonl");
  opts.on_round = [&rounds](const RoundRecord& r) { rounds << to_json_line(r) << '\n' << std::flush; };

  const auto started = std::chrono::steady_clock::now();
  const auto outcome = run(d.source, d.target, textual, cfg.progressive, cfg.gcn, std::move(opts));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  {
    auto matches = open_output(fs::path(out_dir) / "matches.tsv");
    auto unmatched = open_output(fs::path(out_dir) / "unmatchable.tsv");
    write_match_result(outcome.result, d.source, d.target, matches, unmatched);
  }
  if (!dump_path.empty()) {
    std::ofstream f(dump_path, std::ios::binary);
    if (!f) throw DataError("cannot write " + dump_path);
    save_embeddings(outcome.final_embeddings, f);
  }

  nlohmann::json report{{"seeds", outcome.seeds.size()},
                        {"rounds", outcome.history.size()},
                        {"matches", outcome.result.matches.size()},
                        {"unmatched_sources", outcome.result.unmatched_sources.size()},
                        {"unmatched_targets", outcome.result.unmatched_targets.size()},
                        {"hit_max_rounds", outcome.hit_max_rounds},
                        {"seconds", seconds}};
  if (split) report["evaluation"] = score(outcome.result, *split).to_json();
  write_json(fs::path(out_dir) / "report.json", report);
  std::cout << report.dump(2) << '\n';
  return 0;
}

std::vector<std::pair<std::int64_t, std::int64_t>> read_gold_pairs(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (const auto& [s, t] : load_alignment(in).pairs()) out.emplace_back(s.value, t.value);
  return out;
}

std::vector<std::int64_t> read_id_list(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::int64_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(strip_cr(line));
    if (view.empty()) continue;
    out.push_back(detail::parse_id(split_tabs(view)[0], line_no, "entity id"));
  }
  return out;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path, const std::string& unmatchable_path,
                 bool csv) {
  auto pin = open_input(pred_path);
  const auto pred = read_predictions(pin);
  const auto gold = read_gold_pairs(gold_path);
  std::vector<std::int64_t> unmatchable;
  if (!unmatchable_path.empty()) unmatchable = read_id_list(unmatchable_path);
  auto report = score_predictions(pred, gold, unmatchable_path.empty() ? nullptr : &unmatchable);
  report.label = "predictions";
  if (csv) {
    std::cout << format_csv({report});
  } else {
    std::cout << report.to_json().dump(2) << '\n';
  }
  return 0;
}

int cmd_ablate(CommonInputs& in, const std::string& modes_arg, const std::vector<std::string>& sweep, bool csv,
               const std::string& out_dir, const std::vector<std::string>& argv) {
  if (in.gold.empty()) throw InvalidArgument("ablate needs --gold");
  const RunConfig cfg = resolve(in, out_dir);
  const auto d = load_dataset(cfg);
  const auto split = load_split(cfg, d);
  const auto semantic = semantic_matrix(cfg, d);
  const auto strings = string_matrix(cfg, d);

  AblationInputs inputs;
  inputs.source = &d.source;
  inputs.target = &d.target;
  inputs.semantic = &semantic;
  inputs.string = &strings;
  inputs.split = &split;
  inputs.progressive = cfg.progressive;
  inputs.gcn = cfg.gcn;
  inputs.nil_theta = cfg.nil_theta;
  inputs.threads = cfg.threads;

  std::vector<AblationMode> modes;
  if (modes_arg.empty() || modes_arg == "all") {
    modes.assign(std::begin(kAllAblationModes), std::end(kAllAblationModes));
  } else {
    std::stringstream ss(modes_arg);
    std::string name;
    while (std::getline(ss, name, ',')) modes.push_back(parse_ablation_mode(trim(name)));
  }

  nlohmann::json out{{"modes", nlohmann::json::array()}};
  std::vector<EvalReport> reports;
  if (sweep.empty() || !modes_arg.empty()) {
    AblationHarness harness(inputs);
    for (auto m : modes) {
      kgalign::log(LogLevel::kInfo, "ablation mode ", to_string(m));
      reports.push_back(harness.run(m));
      out["modes"].push_back(reports.back().to_json());
    }
  }

  const std::vector<double> grid{0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<ThresholdPoint> theta_points;
  for (const auto& param : sweep) {
    if (param == "alpha" || param == "beta") {
      for (double v : grid) {
        auto in2 = inputs;
        (param == "alpha" ? in2.progressive.alpha : in2.progressive.beta) = v;
        auto r = run_ablation(AblationMode::kFull, in2);
        std::ostringstream label;
        label << param << '=' << v;
        r.label = label.str();
        reports.push_back(r);
        out["sweep"][param].push_back(r.to_json());
      }
    } else if (param == "theta") {
      theta_points = first_round_sweep(inputs, {0.05, 0.15, 0.25, 0.35, 0.45});
      for (const auto& p : theta_points) {
        out["sweep"]["theta"].push_back(
            {{"theta", p.theta}, {"matches", p.matches}, {"correct", p.correct}, {"wrong", p.wrong}});
      }
    } else {
      throw InvalidArgument("unknown sweep parameter '" + param + "' (expected alpha, beta or theta)");
    }
  }

  std::cout << (csv ? format_csv(reports) : format_table(reports));
  if (!theta_points.empty()) {
    std::cout << (csv ? "theta,matches,correct,wrong\n" : "\nfirst-round sweep\ntheta  matches  correct  wrong\n");
    for (const auto& p : theta_points) {
      if (csv) {
        std::cout << p.theta << ',' << p.matches << ',' << p.correct << ',' << p.wrong << '\n';
      } else {
        std::cout << p.theta << "  " << p.matches << "  " << p.correct << "  " << p.wrong << '\n';
      }
    }
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "report.json", out);
    write_json(fs::path(out_dir) / "manifest.json", manifest(cfg, argv, &d));
  }
  return 0;
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_dir) {
  const auto data = generate(cfg);
  const auto vectors = synthetic_word_vectors(data.vocabulary, cfg.vector_dim, cfg.seed);
  write_dataset(data, vectors, data.vocabulary, out_dir);
  std::cout << "wrote " << out_dir << ": " << data.source.size() << " + " << data.target.size() << " entities, "
            << data.gold.size() << " gold pairs, " << data.unmatchable_sources.size() << " unmatchable sources\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"kgalign: unsupervised entity alignment between two knowledge graphs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonInputs align_in;
  std::string align_out, dump_path, load_path;
  auto* align = app.add_subcommand("align", "run the progressive alignment pipeline");
  add_data_options(align, align_in);
  align->add_option("--out", align_out, "output directory")->required();
  align->add_option("--gold", align_in.gold, "gold pairs; restricts matching to the open-world test split");
  align->add_option("--dump-embeddings", dump_path, "write final structural embeddings");
  align->add_option("--load-embeddings", load_path, "use these embeddings in the first round");

  std::string pred_path, gold_path, unmatchable_path;
  bool eval_csv = false;
  auto* evaluate = app.add_subcommand("evaluate", "score a matches file against gold pairs");
  evaluate->add_option("--pred", pred_path, "predicted matches (src \\t tgt, NIL lines allowed)")->required();
  evaluate->add_option("--gold", gold_path, "gold pairs")->required();
  evaluate->add_option("--unmatchable", unmatchable_path, "ids of unmatchable source entities");
  evaluate->add_flag("--csv", eval_csv, "print CSV instead of JSON");

  CommonInputs ablate_in;
  std::string modes, ablate_out;
  std::vector<std::string> sweep;
  bool ablate_csv = false;
  auto* ablate = app.add_subcommand("ablate", "compare pipeline variants on one dataset");
  add_data_options(ablate, ablate_in);
  ablate->add_option("--gold", ablate_in.gold, "gold pairs")->required();
  ablate->add_option("--modes", modes, "comma-separated modes, or 'all'");
  ablate->add_option("--sweep", sweep, "parameters to sweep: alpha, beta, theta")->delimiter(',');
  ablate->add_option("--out", ablate_out, "directory for report.json and manifest.json");
  ablate->add_flag("--csv", ablate_csv, "print CSV");

  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic KG pair with ground truth");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n", synth_cfg.n_entities, "source entities")->capture_default_str();
  synth->add_option("--relations", synth_cfg.n_relations, "relation types")->capture_default_str();
  synth->add_option("--degree", synth_cfg.avg_degree, "average degree")->capture_default_str();
  synth->add_option("--name-noise", synth_cfg.name_noise, "per-character edit rate")->capture_default_str();
  synth->add_option("--structure-noise", synth_cfg.structure_noise, "share of rewired triples")->capture_default_str();
  synth->add_option("--unmatchable", synth_cfg.unmatchable_fraction, "share of sources without a copy")
      ->capture_default_str();
  synth->add_option("--vocabulary", synth_cfg.vocabulary_size, "name tokens (0 = automatic)")->capture_default_str();
  synth->add_option("--vector-dim", synth_cfg.vector_dim, "word-vector dimension")->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*align) return cmd_align(align_in, align_out, dump_path, load_path, args);
    if (*evaluate) return cmd_evaluate(pred_path, gold_path, unmatchable_path, eval_csv);
    if (*ablate) return cmd_ablate(ablate_in, modes, sweep, ablate_csv, ablate_out, args);
    if (*synth) return cmd_synth(synth_cfg, synth_out);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
