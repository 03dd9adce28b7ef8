#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xanchor/align_unsupervised.hpp"
#include "xanchor/anchors.hpp"
#include "xanchor/error.hpp"
#include "xanchor/lexicon.hpp"
#include "xanchor/retrieval.hpp"
#include "xanchor/sense_cluster.hpp"

namespace xanchor {

/// Process exit codes of the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitNotConverged = 3,
  kExitNumeric = 4,
};

/// 2 for input and validation errors, 4 for numeric failures.
int exit_code_for(const std::exception& e);

/// A pipeline stage failed; carries the stage name and the cause's exit code.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::exception& cause);
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

enum class AnchorPolicy { baseline, remove, replace };
AnchorPolicy parse_policy(std::string_view text);
std::string to_string(AnchorPolicy policy);

/// Per-word clustering seed, independent of list order.
std::uint64_t word_seed(std::uint64_t seed, std::string_view word);

/// Clusters every listed word present in `vocab`. Words below
/// params.min_tokens keep their plain anchor and are counted in
/// `ineligible`. Models are returned in vocabulary order.
std::vector<ClusterModel> cluster_words(std::span<const TokenRecord> tokens, const Vocab& vocab,
                                        const std::set<std::string>& words,
                                        const ClusterParams& params, std::uint64_t seed,
                                        std::size_t* ineligible = nullptr);

/// Streaming variant: only the listed words' tokens are kept in memory.
std::vector<ClusterModel> cluster_words_file(const std::filesystem::path& tokens, const Vocab& vocab,
                                             const std::set<std::string>& words,
                                             const ClusterParams& params, std::uint64_t seed,
                                             std::size_t* ineligible = nullptr);

/// Anchor table used for training under `policy`.
AnchorTable apply_policy(AnchorPolicy policy, const AnchorTable& plain, const MultiSenseList& list,
                         std::span<const ClusterModel> models);

struct UnsupervisedResult {
  EvalReport eval;
  TrainReport train;
  RefineReport refine;
  LinearMap map;
};

/// Adversarial training (+ optional refinement) on `train_src`/`tgt`, then
/// evaluation of `eval_src` against `tgt`.
UnsupervisedResult run_unsupervised(const AnchorTable& train_src, const AnchorTable& eval_src,
                                    const AnchorTable& tgt, const GoldLexicon& gold,
                                    const AdvConfig& adv, int refine_rounds, Retrieval retrieval,
                                    std::span<const std::size_t> ks = {});

struct CorpusPaths {
  std::filesystem::path tokens;
  std::filesystem::path vocab;
};

struct SupervisedConfig {
  CorpusPaths src;
  CorpusPaths tgt;
  std::filesystem::path dict;
  std::filesystem::path gold;
  std::optional<std::filesystem::path> multisense;
  Side side = Side::source;
  std::string filter = "none";  ///< none | form | lemma
  std::optional<std::filesystem::path> lemmas;
  std::string method = "procrustes";  ///< procrustes | lstsq
  std::optional<bool> normalize;  ///< default: on for procrustes, off for lstsq
  Retrieval retrieval = Retrieval::nn;
  std::vector<std::size_t> ks{1, 5, 10};
  std::filesystem::path out_dir;

  /// ConfigError on missing files or inconsistent options.
  void validate() const;
};

struct UnsupervisedConfig {
  CorpusPaths src;
  CorpusPaths tgt;
  std::filesystem::path gold;
  std::optional<std::filesystem::path> multisense;
  Side side = Side::source;
  AnchorPolicy policy = AnchorPolicy::baseline;
  ClusterParams cluster;
  std::uint64_t cluster_seed = 0;
  AdvConfig adv;
  int refine_rounds = 0;
  Retrieval retrieval = Retrieval::csls;
  std::vector<std::size_t> ks{1, 5, 10};
  std::filesystem::path out_dir;

  void validate() const;
};

/// build-anchors -> filter-dict -> align-sup -> eval, writing every
/// intermediate artifact to out_dir. Stage failures raise StageError.
EvalReport pipeline_supervised(const SupervisedConfig& cfg);

/// build-anchors -> (cluster | edit-anchors) -> align-unsup -> eval.
UnsupervisedResult pipeline_unsupervised(const UnsupervisedConfig& cfg);

}  // namespace xanchor
