#include "xanchor/pipeline.hpp"

#include <fstream>
#include <map>
#include <unordered_map>

#include "xanchor/align_supervised.hpp"
#include "xanchor/embed_io.hpp"
#include "xanchor/log.hpp"

namespace xanchor {
namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e);
  }
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("missing ") + what + " path");
  if (!std::filesystem::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

AnchorTable build_anchors(const CorpusPaths& c) {
  const Vocab vocab = read_vocab(c.vocab);
  return accumulate_file(c.tokens).finalize(vocab);
}

bool side_includes(Side list_side, Side which) { return list_side == Side::both || list_side == which; }

}  // namespace

int exit_code_for(const std::exception& e) {
  if (auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const TrainingDivergedError*>(&e) || dynamic_cast<const AmbiguityError*>(&e) ||
      dynamic_cast<const RefinementError*>(&e)) {
    return kExitNumeric;
  }
  if (dynamic_cast<const Error*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e) ||
      dynamic_cast<const std::filesystem::filesystem_error*>(&e)) {
    return kExitInput;
  }
  return kExitNumeric;
}

StageError::StageError(std::string stage, const std::exception& cause)
    : Error(stage + ": " + cause.what()), stage_(std::move(stage)), exit_code_(exit_code_for(cause)) {}

AnchorPolicy parse_policy(std::string_view text) {
  if (text == "baseline") return AnchorPolicy::baseline;
  if (text == "remove") return AnchorPolicy::remove;
  if (text == "replace") return AnchorPolicy::replace;
  throw ConfigError("policy must be baseline, remove or replace, got '" + std::string(text) + "'");
}

std::string to_string(AnchorPolicy p) {
  switch (p) {
    case AnchorPolicy::baseline:
      return "baseline";
    case AnchorPolicy::remove:
      return "remove";
    case AnchorPolicy::replace:
      return "replace";
  }
  return "baseline";
}

std::uint64_t word_seed(std::uint64_t seed, std::string_view word) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : word) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return seed ^ h;
}

namespace {

std::vector<ClusterModel> cluster_groups(const std::map<std::uint32_t, std::vector<TokenRecord>>& groups,
                                         const Vocab& vocab, const ClusterParams& params,
                                         std::uint64_t seed, std::size_t* ineligible) {
  std::vector<const std::pair<const std::uint32_t, std::vector<TokenRecord>>*> work;
  for (const auto& g : groups) work.push_back(&g);
  std::vector<std::optional<ClusterModel>> results(work.size());
  std::size_t skipped = 0;
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) reduction(+ : skipped)
  for (long i = 0; i < static_cast<long>(work.size()); ++i) {
    const auto& [id, tokens] = *work[static_cast<std::size_t>(i)];
    const auto& word = vocab.surface(id);
    if (tokens.size() < params.min_tokens) {
      ++skipped;
      continue;
    }
    try {
      results[static_cast<std::size_t>(i)] = cluster_word(word, tokens, params, word_seed(seed, word));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (ineligible) *ineligible = skipped;
  std::vector<ClusterModel> models;
  for (auto& r : results) {
    if (r) models.push_back(std::move(*r));
  }
  return models;
}

std::map<std::uint32_t, std::vector<TokenRecord>> empty_groups(const Vocab& vocab,
                                                               const std::set<std::string>& words) {
  std::map<std::uint32_t, std::vector<TokenRecord>> groups;
  for (const auto& w : words) {
    if (auto id = vocab.find(w)) groups[*id];
  }
  return groups;
}

}  // namespace

std::vector<ClusterModel> cluster_words(std::span<const TokenRecord> tokens, const Vocab& vocab,
                                        const std::set<std::string>& words, const ClusterParams& params,
                                        std::uint64_t seed, std::size_t* ineligible) {
  auto groups = empty_groups(vocab, words);
  for (const auto& t : tokens) {
    auto it = groups.find(t.word_id);
    if (it != groups.end()) it->second.push_back(t);
  }
  return cluster_groups(groups, vocab, params, seed, ineligible);
}

std::vector<ClusterModel> cluster_words_file(const std::filesystem::path& tokens, const Vocab& vocab,
                                             const std::set<std::string>& words,
                                             const ClusterParams& params, std::uint64_t seed,
                                             std::size_t* ineligible) {
  auto groups = empty_groups(vocab, words);
  TokenStreamReader reader(tokens);
  TokenRecord rec;
  while (reader.next(rec)) {
    auto it = groups.find(rec.word_id);
    if (it != groups.end()) it->second.push_back(rec);
  }
  return cluster_groups(groups, vocab, params, seed, ineligible);
}

AnchorTable apply_policy(AnchorPolicy policy, const AnchorTable& plain, const MultiSenseList& list,
                         std::span<const ClusterModel> models) {
  switch (policy) {
    case AnchorPolicy::baseline:
      return plain;
    case AnchorPolicy::remove:
      return remove_anchor_rows(plain, list).table;
    case AnchorPolicy::replace:
      return replace_with_cluster_anchors(plain, models);
  }
  return plain;
}

UnsupervisedResult run_unsupervised(const AnchorTable& train_src, const AnchorTable& eval_src,
                                    const AnchorTable& tgt, const GoldLexicon& gold, const AdvConfig& adv,
                                    int refine_rounds, Retrieval retrieval, std::span<const std::size_t> ks) {
  UnsupervisedResult result;
  auto trained = stage("align-unsup", [&] { return train_adversarial(train_src, tgt, adv); });
  result.train = trained.report;
  result.map = stage("align-unsup", [&] {
    return refine_procrustes(trained.map, train_src, tgt, refine_rounds, adv.criterion_words, adv.csls_knn,
                             &result.refine);
  });
  result.eval = stage("eval", [&] { return evaluate(result.map, eval_src, tgt, gold, retrieval, ks); });
  return result;
}

void SupervisedConfig::validate() const {
  require_file(src.tokens, "source tokens");
  require_file(src.vocab, "source vocab");
  require_file(tgt.tokens, "target tokens");
  require_file(tgt.vocab, "target vocab");
  require_file(dict, "dictionary");
  require_file(gold, "gold dictionary");
  if (filter != "none" && filter != "form" && filter != "lemma") {
    throw ConfigError("filter must be none, form or lemma, got '" + filter + "'");
  }
  if (filter != "none") {
    if (!multisense) throw ConfigError("filter '" + filter + "' needs a multi-sense list");
    require_file(*multisense, "multi-sense list");
  }
  if (filter == "lemma" && lemmas) require_file(*lemmas, "lemma table");
  if (method != "procrustes" && method != "lstsq") {
    throw ConfigError("method must be procrustes or lstsq, got '" + method + "'");
  }
  if (out_dir.empty()) throw ConfigError("missing output directory");
}

void UnsupervisedConfig::validate() const {
  require_file(src.tokens, "source tokens");
  require_file(src.vocab, "source vocab");
  require_file(tgt.tokens, "target tokens");
  require_file(tgt.vocab, "target vocab");
  require_file(gold, "gold dictionary");
  if (policy != AnchorPolicy::baseline) {
    if (!multisense) throw ConfigError("policy '" + to_string(policy) + "' needs a multi-sense list");
    require_file(*multisense, "multi-sense list");
  }
  adv.validate();
  if (refine_rounds < 0) throw ConfigError("refine rounds must be >= 0");
  if (out_dir.empty()) throw ConfigError("missing output directory");
}

EvalReport pipeline_supervised(const SupervisedConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const auto src = stage("build-anchors", [&] { return build_anchors(cfg.src); });
  const auto tgt = stage("build-anchors", [&] { return build_anchors(cfg.tgt); });
  stage("build-anchors", [&] {
    write_embedding_text(src, cfg.out_dir / "src.anchors.vec");
    write_embedding_text(tgt, cfg.out_dir / "tgt.anchors.vec");
    return 0;
  });
  const auto train = stage("filter-dict", [&] {
    auto lex = read_dictionary(cfg.dict);
    if (cfg.filter != "none") {
      const auto list = read_multisense(*cfg.multisense, cfg.side);
      if (cfg.filter == "form") {
        lex = filter_form(lex, list);
      } else {
        lex = filter_lemma(lex, list, cfg.lemmas ? read_lemmas(*cfg.lemmas) : LemmaTable{});
      }
    }
    lex = restrict_valid_pairs(lex, src, tgt);
    write_dictionary(lex, cfg.out_dir / "train.dict");
    return lex;
  });
  const auto map = stage("align-sup", [&] {
    const bool normalize = cfg.normalize.value_or(cfg.method == "procrustes");
    const auto pairs = build_pairs(train, src, tgt, normalize);
    auto m = cfg.method == "procrustes" ? fit_procrustes(pairs) : fit_least_squares(pairs);
    write_map(m, cfg.out_dir / "W.map");
    return m;
  });
  return stage("eval", [&] {
    auto report = evaluate(map, src, tgt, read_gold(cfg.gold), cfg.retrieval, cfg.ks);
    write_json(to_json(report), cfg.out_dir / "report.json");
    return report;
  });
}

UnsupervisedResult pipeline_unsupervised(const UnsupervisedConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  auto src = stage("build-anchors", [&] { return build_anchors(cfg.src); });
  auto tgt = stage("build-anchors", [&] { return build_anchors(cfg.tgt); });
  stage("build-anchors", [&] {
    write_embedding_text(src, cfg.out_dir / "src.anchors.vec");
    write_embedding_text(tgt, cfg.out_dir / "tgt.anchors.vec");
    return 0;
  });
  MultiSenseList list;
  list.side = cfg.side;
  if (cfg.multisense) list = stage("edit-anchors", [&] { return read_multisense(*cfg.multisense, cfg.side); });

  AnchorTable train_src = src;
  AnchorTable eval_src = src;
  AnchorTable train_tgt = tgt;
  if (cfg.policy == AnchorPolicy::remove) {
    stage("edit-anchors", [&] {
      if (side_includes(cfg.side, Side::source)) train_src = remove_anchor_rows(src, list).table;
      if (side_includes(cfg.side, Side::target)) train_tgt = remove_anchor_rows(tgt, list).table;
      write_embedding_text(train_src, cfg.out_dir / "src.train.vec");
      write_embedding_text(train_tgt, cfg.out_dir / "tgt.train.vec");
      return 0;
    });
  } else if (cfg.policy == AnchorPolicy::replace) {
    stage("cluster", [&] {
      nlohmann::json models = nlohmann::json::array();
      auto run = [&](const CorpusPaths& c, const AnchorTable& plain) {
        const auto vocab = read_vocab(c.vocab);
        const auto m = cluster_words_file(c.tokens, vocab, list.words, cfg.cluster, cfg.cluster_seed);
        for (const auto& x : m) models.push_back(to_json(x));
        return replace_with_cluster_anchors(plain, m);
      };
      if (side_includes(cfg.side, Side::source)) train_src = run(cfg.src, src);
      if (side_includes(cfg.side, Side::target)) train_tgt = run(cfg.tgt, tgt);
      eval_src = train_src;
      write_json(models, cfg.out_dir / "clusters.json");
      write_embedding_text(train_src, cfg.out_dir / "src.train.vec");
      write_embedding_text(train_tgt, cfg.out_dir / "tgt.train.vec");
      return 0;
    });
  }
  const auto gold = stage("eval", [&] { return read_gold(cfg.gold); });
  auto result = run_unsupervised(train_src, eval_src, train_tgt, gold, cfg.adv, cfg.refine_rounds,
                                 cfg.retrieval, cfg.ks);
  stage("align-unsup", [&] {
    write_map(result.map, cfg.out_dir / "W.map");
    auto j = to_json(result.train);
    j["refine"] = to_json(result.refine);
    write_json(j, cfg.out_dir / "train_report.json");
    return 0;
  });
  stage("eval", [&] {
    auto j = to_json(result.eval);
    j["converged"] = result.train.converged;
    j["policy"] = to_string(cfg.policy);
    write_json(j, cfg.out_dir / "report.json");
    return 0;
  });
  return result;
}

}  // namespace xanchor
