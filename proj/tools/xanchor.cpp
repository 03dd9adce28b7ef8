// xanchor: command-line front-end.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xanchor/align_supervised.hpp"
#include "xanchor/align_unsupervised.hpp"
#include "xanchor/anchors.hpp"
#include "xanchor/embed_io.hpp"
#include "xanchor/lexicon.hpp"
#include "xanchor/log.hpp"
#include "xanchor/manifest.hpp"
#include "xanchor/pipeline.hpp"
#include "xanchor/retrieval.hpp"
#include "xanchor/sense_cluster.hpp"
#include "xanchor/synthbench.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace xanchor;

namespace {

// Outcome of one subcommand: files read, files written, exit status.
struct RunResult {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  int exit_code = kExitOk;
};

// A subcommand whose options are mirrored into a JSON object for manifests
// and --config files.
struct Command {
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, std::function<json()>>> values;
  std::function<RunResult()> run;

  template <typename T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    values.emplace_back(name, [&var] { return json(var); });
    return app->add_option("--" + name, var, help)->capture_default_str();
  }

  json resolved() const {
    json j = json::object();
    for (const auto& [name, get] : values) j[name] = get();
    return j;
  }
};

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != part.size() || v < 1) throw ConfigError("bad precision cut-off '" + part + "'");
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw ConfigError("no precision cut-offs given");
  return ks;
}

bool parse_on_off(const std::string& text, const char* flag) {
  if (text == "on" || text == "true") return true;
  if (text == "off" || text == "false") return false;
  throw ConfigError(std::string("--") + flag + " must be on or off, got '" + text + "'");
}

// A word list given either as a file (one word per line) or comma-separated.
std::vector<std::string> read_word_list(const std::string& spec, std::vector<fs::path>& inputs) {
  std::vector<std::string> words;
  if (fs::is_regular_file(spec)) {
    inputs.emplace_back(spec);
    for (const auto& w : read_multisense(spec, Side::source).words) words.push_back(w);
    return words;
  }
  std::stringstream ss(spec);
  std::string w;
  while (std::getline(ss, w, ',')) {
    if (!w.empty()) words.push_back(to_lower(w));
  }
  if (words.empty()) throw ConfigError("empty word list");
  return words;
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("--") + flag + " is required");
}

void add_adv_options(Command& c, AdvConfig& adv) {
  c.option("topk", adv.top_k_vocab, "Most frequent rows used for training");
  c.option("epochs", adv.epochs, "Training epochs");
  c.option("batches", adv.batches_per_epoch, "Map updates per epoch");
  c.option("batch-size", adv.batch_size, "Rows per batch and language");
  c.option("dis-steps", adv.dis_steps, "Discriminator updates per map update");
  c.option("hidden", adv.disc_hidden, "Discriminator hidden width");
  c.option("dropout", adv.disc_input_dropout, "Discriminator input dropout");
  c.option("smoothing", adv.label_smoothing, "Discriminator label smoothing");
  c.option("lr-map", adv.lr_map, "Map learning rate");
  c.option("lr-disc", adv.lr_disc, "Discriminator learning rate");
  c.option("lr-decay", adv.lr_decay, "Per-epoch learning-rate factor");
  c.option("beta", adv.ortho_beta, "Orthogonalization step size");
  c.option("threshold", adv.convergence_threshold, "Relative margin over a random map for convergence");
  c.option("criterion-words", adv.criterion_words, "Source rows scored by the unsupervised criterion");
  c.option("seed", adv.seed, "Random seed");
}

struct Options {
  // shared
  std::string tokens, vocab, out, words;
  // build-anchors
  std::int64_t min_count = 1;
  std::size_t shards = 1;
  // cluster
  ClusterParams cluster;
  std::uint64_t seed = 0;
  std::string out_model, out_anchors, anchors_in;
  // filter-dict
  std::string dict, multisense, side = "source", mode = "form", lemmas;
  // edit-anchors
  std::string anchors, remove;
  // align-sup / align-unsup / eval
  std::string src, tgt, method = "procrustes", normalize = "auto", report, map, gold,
                        retrieval = "nn", ks = "1,5,10";
  std::string unsup_retrieval = "csls_knn_10";
  AdvConfig adv;
  int refine = 0;
  // synth
  std::string spec;
  // pipelines
  std::string src_tokens, src_vocab, tgt_tokens, tgt_vocab, filter = "none", policy = "baseline", out_dir;
  // rerun
  std::string manifest;
};

RunResult run_build_anchors(const Options& o) {
  require(o.tokens, "tokens");
  require(o.vocab, "vocab");
  require(o.out, "out");
  if (o.min_count < 1) throw ConfigError("--min-count must be >= 1");
  if (o.shards < 1) throw ConfigError("--shards must be >= 1");
  const Vocab vocab = read_vocab(o.vocab);
  AnchorAccumulator acc(0);
  if (o.shards == 1) {
    acc = accumulate_file(o.tokens);
  } else {
    TokenStreamHeader header;
    const auto records = read_token_stream(o.tokens, &header);
    acc = accumulate_sharded(records, header.dim, o.shards);
  }
  write_embedding_text(acc.finalize(vocab, o.min_count), o.out);
  return {{o.tokens, o.vocab}, {o.out}};
}

RunResult run_cluster(const Options& o) {
  require(o.tokens, "tokens");
  require(o.vocab, "vocab");
  require(o.words, "words");
  require(o.out_model, "out-model");
  RunResult r;
  r.inputs = {o.tokens, o.vocab};
  const Vocab vocab = read_vocab(o.vocab);
  const auto list = read_word_list(o.words, r.inputs);
  const std::set<std::string> words(list.begin(), list.end());
  std::size_t ineligible = 0;
  const auto models = cluster_words_file(o.tokens, vocab, words, o.cluster, o.seed, &ineligible);
  json out = json::array();
  for (const auto& m : models) out.push_back(to_json(m));
  write_json_file(out, o.out_model);
  r.outputs.push_back(o.out_model);
  if (ineligible > 0) {
    warn(std::to_string(ineligible) + " listed words have fewer than " + std::to_string(o.cluster.min_tokens) +
         " tokens and keep their plain anchor");
  }
  if (!o.out_anchors.empty()) {
    AnchorTable plain;
    if (!o.anchors_in.empty()) {
      plain = read_embedding_text(o.anchors_in);
      r.inputs.emplace_back(o.anchors_in);
    } else {
      plain = accumulate_file(o.tokens).finalize(vocab);
    }
    write_embedding_text(replace_with_cluster_anchors(plain, models), o.out_anchors);
    r.outputs.push_back(o.out_anchors);
  }
  return r;
}

RunResult run_filter_dict(const Options& o) {
  require(o.dict, "dict");
  require(o.multisense, "multisense");
  require(o.out, "out");
  RunResult r;
  r.inputs = {o.dict, o.multisense};
  const auto lex = read_dictionary(o.dict);
  const auto list = read_multisense(o.multisense, parse_side(o.side));
  BilingualLexicon out;
  if (o.mode == "form") {
    out = filter_form(lex, list);
  } else if (o.mode == "lemma") {
    LemmaTable lemmas;
    if (!o.lemmas.empty()) {
      lemmas = read_lemmas(o.lemmas);
      r.inputs.emplace_back(o.lemmas);
    }
    out = filter_lemma(lex, list, lemmas);
  } else {
    throw ConfigError("--mode must be form or lemma, got '" + o.mode + "'");
  }
  write_dictionary(out, o.out);
  std::cerr << "filter-dict: " << lex.size() << " pairs, removed " << lex.size() - out.size() << ", kept "
            << out.size() << '\n';
  r.outputs.push_back(o.out);
  return r;
}

RunResult run_edit_anchors(const Options& o) {
  require(o.anchors, "anchors");
  require(o.remove, "remove");
  require(o.out, "out");
  const auto table = read_embedding_text(o.anchors);
  const auto list = read_multisense(o.remove, Side::source);
  const auto result = remove_anchor_rows(table, list);
  write_embedding_text(result.table, o.out);
  std::cerr << "edit-anchors: removed " << result.removed_rows << " rows, " << result.skipped_words
            << " listed words not in the table\n";
  return {{o.anchors, o.remove}, {o.out}};
}

RunResult run_align_sup(const Options& o) {
  require(o.src, "src");
  require(o.tgt, "tgt");
  require(o.dict, "dict");
  require(o.out, "out");
  if (o.method != "procrustes" && o.method != "lstsq") {
    throw ConfigError("--method must be procrustes or lstsq, got '" + o.method + "'");
  }
  const bool normalize = o.normalize == "auto" ? o.method == "procrustes" : parse_on_off(o.normalize, "normalize");
  const auto src = read_embedding_text(o.src);
  const auto tgt = read_embedding_text(o.tgt);
  const auto lex = restrict_valid_pairs(read_dictionary(o.dict), src, tgt);
  const auto pairs = build_pairs(lex, src, tgt, normalize);
  FitStats stats;
  const auto map = o.method == "procrustes" ? fit_procrustes(pairs, &stats) : fit_least_squares(pairs, &stats);
  write_map(map, o.out);
  std::cerr << "align-sup: " << pairs.size() << " training rows, residual " << format_double(stats.residual)
            << '\n';
  return {{o.src, o.tgt, o.dict}, {o.out}};
}

RunResult run_align_unsup(const Options& o) {
  require(o.src, "src");
  require(o.tgt, "tgt");
  require(o.out, "out");
  if (o.refine < 0) throw ConfigError("--refine must be >= 0");
  o.adv.validate();
  const auto src = read_embedding_text(o.src);
  const auto tgt = read_embedding_text(o.tgt);
  auto trained = train_adversarial(src, tgt, o.adv);
  RefineReport refine;
  const auto map =
      refine_procrustes(trained.map, src, tgt, o.refine, o.adv.criterion_words, o.adv.csls_knn, &refine);
  write_map(map, o.out);
  RunResult r{{o.src, o.tgt}, {o.out}};
  if (!o.report.empty()) {
    auto j = to_json(trained.report);
    j["refine"] = to_json(refine);
    write_json_file(j, o.report);
    r.outputs.emplace_back(o.report);
  }
  if (!trained.report.converged) {
    std::cerr << "align-unsup: not converged (best criterion " << format_double(trained.report.best_criterion)
              << " < " << format_double(trained.report.threshold_value) << ")\n";
    r.exit_code = kExitNotConverged;
  }
  return r;
}

RunResult run_eval(const Options& o) {
  require(o.src, "src");
  require(o.tgt, "tgt");
  require(o.map, "map");
  require(o.gold, "gold");
  require(o.out, "out");
  const auto ks = parse_ks(o.ks);
  const auto report = evaluate(read_map(o.map), read_embedding_text(o.src), read_embedding_text(o.tgt),
                               read_gold(o.gold), parse_retrieval(o.retrieval), ks);
  write_json_file(to_json(report), o.out);
  for (const auto& [k, p] : report.precision_at) std::cerr << "P@" << k << " = " << format_double(p) << '\n';
  return {{o.src, o.tgt, o.map, o.gold}, {o.out}};
}

RunResult run_synth(const Options& o) {
  require(o.spec, "spec");
  require(o.out, "out");
  std::ifstream in(o.spec);
  if (!in) throw ConfigError("cannot open spec " + o.spec);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec: ") + e.what());
  }
  const auto spec = synth_spec_from_json(j);
  write_synth(spec, o.out);
  RunResult r{{o.spec}, {}};
  for (const char* f : {SynthFiles::src_tokens, SynthFiles::src_vocab, SynthFiles::tgt_tokens, SynthFiles::tgt_vocab,
                        SynthFiles::gold_word, SynthFiles::gold_sense, SynthFiles::train_degraded,
                        SynthFiles::multisense, SynthFiles::planted, SynthFiles::spec}) {
    r.outputs.push_back(fs::path(o.out) / f);
  }
  return r;
}

RunResult run_export_projector(const Options& o) {
  require(o.tokens, "tokens");
  require(o.vocab, "vocab");
  require(o.words, "words");
  require(o.out, "out");
  RunResult r{{o.tokens, o.vocab}, {}};
  const auto words = read_word_list(o.words, r.inputs);
  const auto points = collect_projector_points(o.tokens, read_vocab(o.vocab), words);
  fs::create_directories(o.out);
  const auto exp = export_projector(points, o.out);
  r.outputs = {exp.vectors_path, exp.metadata_path};
  std::cerr << "export-projector: " << exp.points << " points\n";
  return r;
}

RunResult run_pipeline_sup(const Options& o) {
  SupervisedConfig cfg;
  cfg.src = {o.src_tokens, o.src_vocab};
  cfg.tgt = {o.tgt_tokens, o.tgt_vocab};
  cfg.dict = o.dict;
  cfg.gold = o.gold;
  if (!o.multisense.empty()) cfg.multisense = fs::path(o.multisense);
  cfg.side = parse_side(o.side);
  cfg.filter = o.filter;
  if (!o.lemmas.empty()) cfg.lemmas = fs::path(o.lemmas);
  cfg.method = o.method;
  if (o.normalize != "auto") cfg.normalize = parse_on_off(o.normalize, "normalize");
  cfg.retrieval = parse_retrieval(o.retrieval);
  cfg.ks = parse_ks(o.ks);
  cfg.out_dir = o.out_dir;
  const auto report = pipeline_supervised(cfg);
  RunResult r{{o.src_tokens, o.src_vocab, o.tgt_tokens, o.tgt_vocab, o.dict, o.gold}, {}};
  if (cfg.multisense) r.inputs.push_back(*cfg.multisense);
  if (cfg.lemmas) r.inputs.push_back(*cfg.lemmas);
  for (const char* f : {"src.anchors.vec", "tgt.anchors.vec", "train.dict", "W.map", "report.json"}) {
    r.outputs.push_back(fs::path(o.out_dir) / f);
  }
  std::cerr << "pipeline-sup: P@1 = " << format_double(report.precision_at.begin()->second) << '\n';
  return r;
}

RunResult run_pipeline_unsup(const Options& o) {
  UnsupervisedConfig cfg;
  cfg.src = {o.src_tokens, o.src_vocab};
  cfg.tgt = {o.tgt_tokens, o.tgt_vocab};
  cfg.gold = o.gold;
  if (!o.multisense.empty()) cfg.multisense = fs::path(o.multisense);
  cfg.side = parse_side(o.side);
  cfg.policy = parse_policy(o.policy);
  cfg.cluster = o.cluster;
  cfg.cluster_seed = o.seed;
  cfg.adv = o.adv;
  cfg.refine_rounds = o.refine;
  cfg.retrieval = parse_retrieval(o.unsup_retrieval);
  cfg.ks = parse_ks(o.ks);
  cfg.out_dir = o.out_dir;
  const auto result = pipeline_unsupervised(cfg);
  RunResult r{{o.src_tokens, o.src_vocab, o.tgt_tokens, o.tgt_vocab, o.gold}, {}};
  if (cfg.multisense) r.inputs.push_back(*cfg.multisense);
  std::vector<std::string> outs{"src.anchors.vec", "tgt.anchors.vec", "W.map", "train_report.json", "report.json"};
  if (cfg.policy != AnchorPolicy::baseline) {
    outs.push_back("src.train.vec");
    outs.push_back("tgt.train.vec");
  }
  if (cfg.policy == AnchorPolicy::replace) outs.push_back("clusters.json");
  for (const auto& f : outs) r.outputs.push_back(fs::path(o.out_dir) / f);
  std::cerr << "pipeline-unsup: P@1 = " << format_double(result.eval.precision_at.begin()->second)
            << (result.train.converged ? "" : " (not converged)") << '\n';
  if (!result.train.converged) r.exit_code = kExitNotConverged;
  return r;
}

// ---------------------------------------------------------------------------
// argv assembly from JSON (config files and manifests)

std::string json_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) {
      if (!s.empty()) s += ',';
      s += json_scalar(e);
    }
    return s;
  }
  throw ConfigError("unsupported config value " + v.dump());
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& name) {
  const std::string flag = "--" + name;
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Config keys become flags unless the same flag was given explicitly.
std::vector<std::string> merge_config(const std::vector<std::string>& args, const json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  std::vector<std::string> out = args;
  for (const auto& [key, value] : config.items()) {
    if (key == "config") continue;
    if (given_on_command_line(args, key)) continue;
    out.push_back("--" + key);
    out.push_back(json_scalar(value));
  }
  return out;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

// Expands "--config file" (after the subcommand) into explicit flags.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t span = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      span = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      span = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + span));
    json config = load_json(path);
    // A config may be a flat flag object or hold one object per subcommand.
    if (args.size() > 1 && config.contains(args[1]) && config[args[1]].is_object()) config = config[args[1]];
    return merge_config(args, config);
  }
  return args;
}

int run_cli(std::vector<std::string> args);

RunResult run_rerun(const Options& o) {
  require(o.manifest, "manifest");
  const auto m = RunManifest::read(o.manifest);
  if (m.subcommand == "rerun") throw ConfigError("manifest describes a rerun");
  std::vector<std::string> args{"xanchor", m.subcommand};
  args = merge_config(args, m.flags);
  const int code = run_cli(args);
  RunResult r{{o.manifest}, {}};
  r.exit_code = code;
  for (const auto& [path, digest] : m.outputs) {
    if (!fs::exists(path) || "sha256:" + sha256_file(path) != digest) {
      std::cerr << "rerun: " << path << " differs from the manifest\n";
      if (r.exit_code == kExitOk) r.exit_code = kExitInput;
    }
  }
  return r;
}

int run_cli(std::vector<std::string> args) {
  Options o;
  CLI::App app{"Cross-lingual alignment of contextual embedding anchors", "xanchor"};
  app.require_subcommand(1);
  app.set_version_flag("--version", XANCHOR_VERSION);
  app.add_option("--config", "JSON file with option values; explicit flags win")->expected(1);
  std::vector<std::unique_ptr<Command>> commands;

  auto add = [&](const char* name, const char* help, std::function<RunResult()> run) -> Command& {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, help);
    c->app->add_option("--config", "JSON file with option values; explicit flags win");
    c->run = std::move(run);
    commands.push_back(std::move(c));
    return *commands.back();
  };

  {
    auto& c = add("build-anchors", "Average token embeddings into word anchors", [&] { return run_build_anchors(o); });
    c.option("tokens", o.tokens, "Token stream (.tkeb)")->required();
    c.option("vocab", o.vocab, "Vocabulary TSV")->required();
    c.option("min-count", o.min_count, "Drop words with fewer tokens");
    c.option("shards", o.shards, "Contiguous shards accumulated in parallel");
    c.option("out", o.out, "Output anchors (text embedding format)")->required();
  }
  {
    auto& c = add("cluster", "Spectral clustering of multi-sense word tokens", [&] { return run_cluster(o); });
    c.option("tokens", o.tokens, "Token stream (.tkeb)")->required();
    c.option("vocab", o.vocab, "Vocabulary TSV")->required();
    c.option("words", o.words, "Multi-sense word list file, or comma-separated words")->required();
    c.option("min-tokens", o.cluster.min_tokens, "Minimum tokens for clustering");
    c.option("max-sample", o.cluster.max_sample, "Token sample cap per word");
    c.option("kmax", o.cluster.k_max, "Largest cluster count");
    c.option("eigen-cap", o.cluster.eigen_cap, "Points entering the eigendecomposition");
    c.option("keep-fraction", o.cluster.keep_fraction, "Fraction of each affinity row kept");
    c.option("restarts", o.cluster.kmeans_restarts, "k-means restarts");
    c.option("seed", o.seed, "Random seed");
    c.option("anchors", o.anchors_in, "Plain anchors to edit (default: computed from --tokens)");
    c.option("out-model", o.out_model, "Cluster models (JSON)")->required();
    c.option("out-anchors", o.out_anchors, "Anchors with cluster-level rows");
  }
  {
    auto& c = add("filter-dict", "Remove multi-sense translation pairs", [&] { return run_filter_dict(o); });
    c.option("dict", o.dict, "Bilingual dictionary")->required();
    c.option("multisense", o.multisense, "Multi-sense word list")->required();
    c.option("side", o.side, "source, target or both");
    c.option("mode", o.mode, "form or lemma");
    c.option("lemmas", o.lemmas, "Lemma table TSV (lemma mode)");
    c.option("out", o.out, "Filtered dictionary")->required();
  }
  {
    auto& c = add("edit-anchors", "Remove anchors of listed words", [&] { return run_edit_anchors(o); });
    c.option("anchors", o.anchors, "Anchors (text embedding format)")->required();
    c.option("remove", o.remove, "Word list")->required();
    c.option("out", o.out, "Edited anchors")->required();
  }
  {
    auto& c = add("align-sup", "Supervised linear map from a dictionary", [&] { return run_align_sup(o); });
    c.option("src", o.src, "Source anchors")->required();
    c.option("tgt", o.tgt, "Target anchors")->required();
    c.option("dict", o.dict, "Training dictionary")->required();
    c.option("method", o.method, "procrustes or lstsq");
    c.option("normalize", o.normalize, "on, off or auto (on for procrustes)");
    c.option("out", o.out, "Map file")->required();
  }
  {
    auto& c = add("align-unsup", "Adversarial map without a dictionary", [&] { return run_align_unsup(o); });
    c.option("src", o.src, "Source anchors")->required();
    c.option("tgt", o.tgt, "Target anchors")->required();
    add_adv_options(c, o.adv);
    c.option("refine", o.refine, "Procrustes refinement rounds");
    c.option("out", o.out, "Map file")->required();
    c.option("report", o.report, "Training report (JSON)");
  }
  {
    auto& c = add("eval", "Bilingual lexicon induction precision", [&] { return run_eval(o); });
    c.option("src", o.src, "Source anchors")->required();
    c.option("tgt", o.tgt, "Target anchors")->required();
    c.option("map", o.map, "Map file")->required();
    c.option("gold", o.gold, "Gold dictionary")->required();
    c.option("retrieval", o.retrieval, "nn or csls_knn_10");
    c.option("k", o.ks, "Comma-separated cut-offs");
    c.option("out", o.out, "Report (JSON)")->required();
  }
  {
    auto& c = add("synth", "Generate a synthetic bilingual bundle", [&] { return run_synth(o); });
    c.option("spec", o.spec, "Spec (JSON)")->required();
    c.option("out", o.out, "Output directory")->required();
  }
  {
    auto& c = add("export-projector", "Write Embedding Projector TSV files", [&] { return run_export_projector(o); });
    c.option("tokens", o.tokens, "Token stream (.tkeb)")->required();
    c.option("vocab", o.vocab, "Vocabulary TSV")->required();
    c.option("words", o.words, "Word list file, or comma-separated words")->required();
    c.option("out", o.out, "Output directory")->required();
  }
  {
    auto& c = add("pipeline-sup", "build-anchors, filter-dict, align-sup, eval", [&] { return run_pipeline_sup(o); });
    c.option("src-tokens", o.src_tokens, "Source token stream")->required();
    c.option("src-vocab", o.src_vocab, "Source vocabulary")->required();
    c.option("tgt-tokens", o.tgt_tokens, "Target token stream")->required();
    c.option("tgt-vocab", o.tgt_vocab, "Target vocabulary")->required();
    c.option("dict", o.dict, "Training dictionary")->required();
    c.option("gold", o.gold, "Gold dictionary")->required();
    c.option("multisense", o.multisense, "Multi-sense word list");
    c.option("side", o.side, "source, target or both");
    c.option("filter", o.filter, "none, form or lemma");
    c.option("lemmas", o.lemmas, "Lemma table TSV");
    c.option("method", o.method, "procrustes or lstsq");
    c.option("normalize", o.normalize, "on, off or auto");
    c.option("retrieval", o.retrieval, "nn or csls_knn_10");
    c.option("k", o.ks, "Comma-separated cut-offs");
    c.option("out-dir", o.out_dir, "Directory for every artifact")->required();
  }
  {
    auto& c = add("pipeline-unsup", "build-anchors, cluster or edit-anchors, align-unsup, eval",
                  [&] { return run_pipeline_unsup(o); });
    c.option("src-tokens", o.src_tokens, "Source token stream")->required();
    c.option("src-vocab", o.src_vocab, "Source vocabulary")->required();
    c.option("tgt-tokens", o.tgt_tokens, "Target token stream")->required();
    c.option("tgt-vocab", o.tgt_vocab, "Target vocabulary")->required();
    c.option("gold", o.gold, "Gold dictionary")->required();
    c.option("multisense", o.multisense, "Multi-sense word list");
    c.option("side", o.side, "source, target or both");
    c.option("policy", o.policy, "baseline, remove or replace");
    c.option("min-tokens", o.cluster.min_tokens, "Minimum tokens for clustering");
    c.option("max-sample", o.cluster.max_sample, "Token sample cap per word");
    c.option("kmax", o.cluster.k_max, "Largest cluster count");
    c.option("keep-fraction", o.cluster.keep_fraction, "Fraction of each affinity row kept");
    c.option("cluster-seed", o.seed, "Clustering seed");
    add_adv_options(c, o.adv);
    c.option("refine", o.refine, "Procrustes refinement rounds");
    c.option("retrieval", o.unsup_retrieval, "nn or csls_knn_10");
    c.option("k", o.ks, "Comma-separated cut-offs");
    c.option("out-dir", o.out_dir, "Directory for every artifact")->required();
  }
  {
    auto& c = add("rerun", "Re-run a manifest and compare output digests", [&] { return run_rerun(o); });
    c.option("manifest", o.manifest, "Manifest written by an earlier run")->required();
  }

  try {
    args = expand_config(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  for (auto& c : commands) {
    if (!c->app->parsed()) continue;
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    try {
      result = c->run();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exit_code_for(e);
    }
    if (c->app->get_name() == "rerun") return result.exit_code;
    RunManifest m;
    m.subcommand = c->app->get_name();
    m.flags = c->resolved();
    if (m.flags.contains("seed")) m.seed = m.flags["seed"].get<std::uint64_t>();
    if (m.flags.contains("cluster-seed")) m.seed = m.flags["cluster-seed"].get<std::uint64_t>();
    m.tool_version = XANCHOR_VERSION;
    try {
      for (const auto& p : result.inputs) m.add_input(p);
      for (const auto& p : result.outputs) m.add_output(p);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exit_code_for(e);
    }
    m.exit_code = result.exit_code;
    m.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path primary = result.outputs.empty() ? fs::path("xanchor") : result.outputs.front();
    fs::path manifest_path = manifest_path_for(primary);
    if (m.subcommand == "synth" || m.subcommand == "export-projector" || m.subcommand.rfind("pipeline", 0) == 0) {
      manifest_path = primary.parent_path() / "manifest.json";
    }
    m.write(manifest_path);
    return result.exit_code;
  }
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return run_cli(std::move(args));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
