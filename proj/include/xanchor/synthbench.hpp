#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xanchor/embed_io.hpp"
#include "xanchor/lexicon.hpp"
#include "xanchor/linear_map.hpp"
#include "xanchor/retrieval.hpp"

namespace xanchor {

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t d = 32;
  std::size_t n_words = 5000;
  std::size_t n_multisense = 250;
  std::size_t senses_min = 2;
  std::size_t senses_max = 3;
  /// Token count of the majority sense; other senses get sense_skew times it.
  std::size_t tokens_min = 200;
  std::size_t tokens_max = 400;
  /// Between-sense center distance in units of sigma.
  double sense_separation = 8.0;
  double sense_skew = 0.25;
  /// Cross-lingual token noise in units of sigma.
  double noise_std = 0.05;
  /// 0 draws word centers uniformly on the sphere; otherwise centers are
  /// grouped around this many topic directions of decreasing weight.
  std::size_t topics = 0;
  double topic_spread = 0.5;

  /// SpecError when infeasible.
  void validate() const;
};

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// (source surface, sense index) -> target surface. Sense 0 is the majority.
using SenseGold = std::map<std::pair<std::string, std::size_t>, std::string>;

struct SynthWord {
  std::string surface;  ///< source surface
  std::vector<std::string> targets;  ///< one target word per sense
  std::vector<std::vector<double>> centers;  ///< source sense centers
  std::vector<std::size_t> tokens;  ///< tokens per sense
};

/// Everything in a bundle except the token streams.
struct SynthBundle {
  SynthSpec spec;
  double sigma = 0.0;  ///< within-sense standard deviation per coordinate
  Vocab src_vocab;
  Vocab tgt_vocab;
  LinearMap planted;
  GoldLexicon gold_word;
  SenseGold gold_sense;
  MultiSenseList multisense;
  std::vector<SynthWord> words;  ///< in source vocabulary order
};

enum class Language { source, target };

/// Receives every generated token with its source word index (into
/// SynthBundle::words) and sense.
using TokenSink = std::function<void(Language, const TokenRecord&, std::size_t word, std::size_t sense)>;

/// Deterministic per seed. Tokens are emitted word by word in source
/// vocabulary order, source tokens of a word before its target tokens.
SynthBundle generate(const SynthSpec& spec, const TokenSink& sink);

struct SynthCorpus {
  SynthBundle bundle;
  std::vector<TokenRecord> src_tokens;
  std::vector<TokenRecord> tgt_tokens;
  std::vector<std::size_t> src_sense;  ///< planted sense of each source token
};

SynthCorpus generate_in_memory(const SynthSpec& spec);

enum class DegradePolicy { majority_only };

/// One pair per source word; multi-sense words keep only the majority
/// sense's target.
BilingualLexicon degrade_lexicon(const SenseGold& gold, DegradePolicy policy = DegradePolicy::majority_only);

/// Files written by `xanchor synth`, relative to the output directory.
struct SynthFiles {
  static constexpr const char* src_tokens = "src.tkeb";
  static constexpr const char* src_vocab = "src.vocab.tsv";
  static constexpr const char* tgt_tokens = "tgt.tkeb";
  static constexpr const char* tgt_vocab = "tgt.vocab.tsv";
  static constexpr const char* gold_word = "gold_word.txt";
  static constexpr const char* gold_sense = "gold_sense.tsv";
  static constexpr const char* train_degraded = "train_degraded.txt";
  static constexpr const char* multisense = "multisense.txt";
  static constexpr const char* planted = "planted.map";
  static constexpr const char* spec = "spec.json";
};

/// Streams a bundle to `dir` (created if needed).
SynthBundle write_synth(const SynthSpec& spec, const std::filesystem::path& dir);

void write_sense_gold(const SenseGold& gold, const std::filesystem::path& path);
SenseGold read_sense_gold(const std::filesystem::path& path);

/// Gaussian blobs with planted labels for clustering checks: `k` centers at
/// pairwise distance separation*sigma around a random unit vector.
struct PlantedMixture {
  std::vector<TokenRecord> tokens;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> centers;
};

PlantedMixture planted_mixture(std::size_t k, std::size_t dim, std::size_t points_per_cluster,
                               double separation, double sigma, std::uint64_t seed);

/// Rows of a k x dim matrix: vertices of a regular simplex with the given
/// edge length, centered at the origin, randomly oriented.
std::vector<std::vector<double>> simplex_offsets(std::size_t k, std::size_t dim, double edge,
                                                 std::uint64_t seed);

}  // namespace xanchor
