#include "xanchor/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "xanchor/align_unsupervised.hpp"
#include "xanchor/error.hpp"

namespace xanchor {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) { return splitmix(seed ^ splitmix(stream)); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }
  // Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }
  std::vector<double> unit(std::size_t d) {
    std::vector<double> v(d);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (auto& x : v) {
        x = normal();
        n2 += x * x;
      }
    } while (n2 == 0.0);
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v) x *= inv;
    return v;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

double min_pairwise_distance(const RowMatrix& centers) {
  const auto n = centers.rows();
  const Eigen::VectorXd sq = centers.rowwise().squaredNorm();
  double best = std::numeric_limits<double>::infinity();
  constexpr Eigen::Index kBlock = 512;
  for (Eigen::Index b = 0; b < n; b += kBlock) {
    const auto len = std::min(kBlock, n - b);
    const RowMatrix g = centers.middleRows(b, len) * centers.transpose();
    for (Eigen::Index r = 0; r < len; ++r) {
      const auto i = b + r;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        best = std::min(best, sq(i) + sq(j) - 2.0 * g(r, j));
      }
    }
  }
  return std::sqrt(std::max(best, 0.0));
}

RowMatrix word_centers(const SynthSpec& spec, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(spec.n_words);
  const auto d = static_cast<Eigen::Index>(spec.d);
  RowMatrix centers(n, d);
  std::vector<std::vector<double>> topic_dirs;
  std::vector<double> cumulative;
  if (spec.topics > 0) {
    double total = 0.0;
    for (std::size_t t = 0; t < spec.topics; ++t) {
      topic_dirs.push_back(rng.unit(spec.d));
      total += 1.0 / static_cast<double>(t + 1);
      cumulative.push_back(total);
    }
    for (auto& c : cumulative) c /= total;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> v;
    if (spec.topics == 0) {
      v = rng.unit(spec.d);
    } else {
      const double u = rng.uniform();
      const auto t = static_cast<std::size_t>(
          std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      const auto& dir = topic_dirs[std::min(t, spec.topics - 1)];
      v.resize(spec.d);
      double n2 = 0.0;
      for (std::size_t c = 0; c < spec.d; ++c) {
        v[c] = dir[c] + spec.topic_spread * rng.normal() / std::sqrt(static_cast<double>(spec.d));
        n2 += v[c] * v[c];
      }
      for (auto& x : v) x /= std::sqrt(n2);
    }
    for (Eigen::Index c = 0; c < d; ++c) centers(i, c) = v[static_cast<std::size_t>(c)];
  }
  return centers;
}

}  // namespace

void SynthSpec::validate() const {
  auto fail = [](const std::string& m) { throw SpecError("synth spec: " + m); };
  if (d < 2) fail("d must be >= 2");
  if (n_words < 2) fail("n_words must be >= 2");
  if (n_multisense > n_words) fail("n_multisense exceeds n_words");
  if (senses_min < 2 || senses_max < senses_min) fail("senses range must satisfy 2 <= min <= max");
  if (n_multisense > 0 && senses_max > d) {
    fail("cannot place " + std::to_string(senses_max) + " equidistant sense centers in d=" + std::to_string(d));
  }
  if (tokens_min < 1 || tokens_max < tokens_min) fail("tokens range must satisfy 1 <= min <= max");
  if (!(sense_separation > 0.0)) fail("sense_separation must be positive");
  if (!(sense_skew > 0.0) || sense_skew > 1.0) fail("sense_skew must be in (0, 1]");
  if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
  if (topics > 0 && !(topic_spread > 0.0)) fail("topic_spread must be positive");
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"seed", s.seed},
          {"d", s.d},
          {"n_words", s.n_words},
          {"n_multisense", s.n_multisense},
          {"senses_per_word", {s.senses_min, s.senses_max}},
          {"tokens_per_sense", {s.tokens_min, s.tokens_max}},
          {"sense_separation", s.sense_separation},
          {"sense_skew", s.sense_skew},
          {"noise_std", s.noise_std},
          {"topics", s.topics},
          {"topic_spread", s.topic_spread}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    if (!j.is_object()) throw SpecError("synth spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") s.seed = value.get<std::uint64_t>();
      else if (key == "d") s.d = value.get<std::size_t>();
      else if (key == "n_words") s.n_words = value.get<std::size_t>();
      else if (key == "n_multisense") s.n_multisense = value.get<std::size_t>();
      else if (key == "senses_per_word") {
        s.senses_min = value.at(0).get<std::size_t>();
        s.senses_max = value.at(1).get<std::size_t>();
      } else if (key == "tokens_per_sense") {
        s.tokens_min = value.at(0).get<std::size_t>();
        s.tokens_max = value.at(1).get<std::size_t>();
      } else if (key == "sense_separation") s.sense_separation = value.get<double>();
      else if (key == "sense_skew") s.sense_skew = value.get<double>();
      else if (key == "noise_std") s.noise_std = value.get<double>();
      else if (key == "topics") s.topics = value.get<std::size_t>();
      else if (key == "topic_spread") s.topic_spread = value.get<double>();
      else throw SpecError("synth spec: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::vector<std::vector<double>> simplex_offsets(std::size_t k, std::size_t dim, double edge,
                                                 std::uint64_t seed) {
  if (k > dim) throw SpecError("simplex with " + std::to_string(k) + " vertices needs d >= k");
  const RowMatrix q = random_orthogonal(dim, seed);
  std::vector<std::vector<double>> out(k, std::vector<double>(dim, 0.0));
  const double scale = edge / std::sqrt(2.0);
  for (std::size_t c = 0; c < dim; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += scale * q(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
    mean /= static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      out[i][c] = scale * q(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) - mean;
    }
  }
  return out;
}

SynthBundle generate(const SynthSpec& spec, const TokenSink& sink) {
  spec.validate();
  SynthBundle bundle;
  bundle.spec = spec;
  Rng rng(derive(spec.seed, 1));
  const std::size_t d = spec.d;

  bundle.planted.w = random_orthogonal(d, derive(spec.seed, 2));
  bundle.planted.orthogonal = true;

  const RowMatrix centers = word_centers(spec, rng);
  const double dmin = min_pairwise_distance(centers);
  if (!(dmin > 0.0)) throw SpecError("synth spec: coincident word centers");
  bundle.sigma = dmin / 8.0;

  // Multi-sense words: a uniform subset of the generation indices.
  std::vector<std::size_t> idx(spec.n_words);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < spec.n_multisense; ++i) std::swap(idx[i], idx[i + rng.index(spec.n_words - i)]);
  std::vector<bool> multi(spec.n_words, false);
  for (std::size_t i = 0; i < spec.n_multisense; ++i) multi[idx[i]] = true;

  std::vector<SynthWord> generated(spec.n_words);
  std::vector<std::size_t> totals(spec.n_words);
  for (std::size_t i = 0; i < spec.n_words; ++i) {
    auto& w = generated[i];
    w.surface = numbered("w", i);
    const std::size_t k = multi[i] ? rng.between(spec.senses_min, spec.senses_max) : 1;
    const std::size_t majority = rng.between(spec.tokens_min, spec.tokens_max);
    std::vector<double> base(d);
    for (std::size_t c = 0; c < d; ++c) base[c] = centers(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    if (k == 1) {
      w.centers.push_back(base);
      w.tokens.push_back(majority);
      w.targets.push_back(numbered("t", i));
    } else {
      const auto offsets = simplex_offsets(k, d, spec.sense_separation * bundle.sigma, derive(spec.seed, 1000 + i));
      for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> c(d);
        for (std::size_t x = 0; x < d; ++x) c[x] = base[x] + offsets[j][x];
        w.centers.push_back(std::move(c));
        const auto minority = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(spec.sense_skew * static_cast<double>(majority))));
        w.tokens.push_back(j == 0 ? majority : minority);
        w.targets.push_back(numbered("t", i) + "_" + std::to_string(j));
      }
      bundle.multisense.words.insert(w.surface);
    }
    totals[i] = std::accumulate(w.tokens.begin(), w.tokens.end(), std::size_t{0});
  }
  bundle.multisense.side = Side::source;

  // Vocabularies in descending frequency, ties by generation order.
  std::vector<std::size_t> order(spec.n_words);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return totals[a] > totals[b]; });
  std::vector<std::string> src_surfaces;
  for (auto i : order) {
    src_surfaces.push_back(generated[i].surface);
    bundle.words.push_back(generated[i]);
  }
  struct TargetEntry {
    std::size_t count, word, sense;
  };
  std::vector<TargetEntry> targets;
  for (std::size_t w = 0; w < bundle.words.size(); ++w) {
    for (std::size_t j = 0; j < bundle.words[w].tokens.size(); ++j) targets.push_back({bundle.words[w].tokens[j], w, j});
  }
  std::stable_sort(targets.begin(), targets.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  std::vector<std::string> tgt_surfaces;
  std::vector<std::vector<std::uint32_t>> tgt_id(bundle.words.size());
  for (auto& w : tgt_id) w.clear();
  for (std::size_t w = 0; w < bundle.words.size(); ++w) tgt_id[w].resize(bundle.words[w].tokens.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& e = targets[t];
    tgt_surfaces.push_back(bundle.words[e.word].targets[e.sense]);
    tgt_id[e.word][e.sense] = static_cast<std::uint32_t>(t);
  }
  bundle.src_vocab = Vocab(std::move(src_surfaces));
  bundle.tgt_vocab = Vocab(std::move(tgt_surfaces));

  for (const auto& w : bundle.words) {
    for (std::size_t j = 0; j < w.targets.size(); ++j) {
      bundle.gold_word[w.surface].insert(w.targets[j]);
      bundle.gold_sense[{w.surface, j}] = w.targets[j];
    }
  }

  // Tokens, word by word with a per-word stream.
  const RowMatrix& r = bundle.planted.w;
  const double noise = spec.noise_std * bundle.sigma;
  std::uint32_t src_ctx = 0;
  std::uint32_t tgt_ctx = 0;
  std::vector<TokenRecord> src_batch, tgt_batch;
  std::vector<std::size_t> sense_batch;
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  for (std::size_t w = 0; w < bundle.words.size(); ++w) {
    const auto& word = bundle.words[w];
    Rng wr(derive(spec.seed, 1'000'000 + order[w]));
    src_batch.clear();
    tgt_batch.clear();
    sense_batch.clear();
    for (std::size_t j = 0; j < word.tokens.size(); ++j) {
      for (std::size_t t = 0; t < word.tokens[j]; ++t) {
        TokenRecord s{static_cast<std::uint32_t>(w), src_ctx++, std::vector<float>(d)};
        for (std::size_t c = 0; c < d; ++c) {
          s.vector[c] = static_cast<float>(word.centers[j][c] + bundle.sigma * wr.normal());
          x(static_cast<Eigen::Index>(c)) = s.vector[c];
        }
        const Eigen::VectorXd y = r * x;
        TokenRecord tt{tgt_id[w][j], tgt_ctx++, std::vector<float>(d)};
        for (std::size_t c = 0; c < d; ++c) {
          tt.vector[c] = static_cast<float>(y(static_cast<Eigen::Index>(c)) + (noise > 0.0 ? noise * wr.normal() : 0.0));
        }
        src_batch.push_back(std::move(s));
        tgt_batch.push_back(std::move(tt));
        sense_batch.push_back(j);
      }
    }
    if (sink) {
      for (std::size_t t = 0; t < src_batch.size(); ++t) sink(Language::source, src_batch[t], w, sense_batch[t]);
      for (std::size_t t = 0; t < tgt_batch.size(); ++t) sink(Language::target, tgt_batch[t], w, sense_batch[t]);
    }
  }
  return bundle;
}

SynthCorpus generate_in_memory(const SynthSpec& spec) {
  SynthCorpus corpus;
  corpus.bundle = generate(spec, [&](Language lang, const TokenRecord& rec, std::size_t, std::size_t sense) {
    if (lang == Language::source) {
      corpus.src_tokens.push_back(rec);
      corpus.src_sense.push_back(sense);
    } else {
      corpus.tgt_tokens.push_back(rec);
    }
  });
  return corpus;
}

BilingualLexicon degrade_lexicon(const SenseGold& gold, DegradePolicy) {
  BilingualLexicon lex;
  for (const auto& [key, target] : gold) {
    if (key.second == 0) lex.pairs.push_back({key.first, target});
  }
  return lex;
}

void write_sense_gold(const SenseGold& gold, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& [key, target] : gold) out << key.first << '\t' << key.second << '\t' << target << '\n';
}

SenseGold read_sense_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  SenseGold gold;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string src, tgt;
    std::size_t sense = 0;
    if (!(ss >> src >> sense >> tgt)) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected source<TAB>sense<TAB>target", lineno);
    }
    gold[{src, sense}] = tgt;
  }
  return gold;
}

SynthBundle write_synth(const SynthSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir);
  TokenStreamWriter src(dir / SynthFiles::src_tokens, static_cast<std::uint32_t>(spec.d));
  TokenStreamWriter tgt(dir / SynthFiles::tgt_tokens, static_cast<std::uint32_t>(spec.d));
  SynthBundle bundle = generate(spec, [&](Language lang, const TokenRecord& rec, std::size_t, std::size_t) {
    (lang == Language::source ? src : tgt).write(rec);
  });
  src.close();
  tgt.close();
  write_vocab(bundle.src_vocab, dir / SynthFiles::src_vocab);
  write_vocab(bundle.tgt_vocab, dir / SynthFiles::tgt_vocab);
  BilingualLexicon gold;
  for (const auto& [s, targets] : bundle.gold_word) {
    for (const auto& t : targets) gold.pairs.push_back({s, t});
  }
  write_dictionary(gold, dir / SynthFiles::gold_word);
  write_sense_gold(bundle.gold_sense, dir / SynthFiles::gold_sense);
  write_dictionary(degrade_lexicon(bundle.gold_sense), dir / SynthFiles::train_degraded);
  write_multisense(bundle.multisense, dir / SynthFiles::multisense);
  write_map(bundle.planted, dir / SynthFiles::planted);
  std::ofstream(dir / SynthFiles::spec) << to_json(spec).dump(2) << '\n';
  return bundle;
}

PlantedMixture planted_mixture(std::size_t k, std::size_t dim, std::size_t points_per_cluster,
                               double separation, double sigma, std::uint64_t seed) {
  Rng rng(derive(seed, 7));
  const auto base = rng.unit(dim);
  const auto offsets = simplex_offsets(k, dim, separation * sigma, derive(seed, 8));
  PlantedMixture m;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> c(dim);
    for (std::size_t x = 0; x < dim; ++x) c[x] = base[x] + offsets[j][x];
    m.centers.push_back(std::move(c));
  }
  std::uint32_t ctx = 0;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t p = 0; p < points_per_cluster; ++p) {
      TokenRecord t{0, ctx++, std::vector<float>(dim)};
      for (std::size_t x = 0; x < dim; ++x) t.vector[x] = static_cast<float>(m.centers[j][x] + sigma * rng.normal());
      m.tokens.push_back(std::move(t));
      m.labels.push_back(j);
    }
  }
  return m;
}

}  // namespace xanchor
