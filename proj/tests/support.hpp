#pragma once

#include <cstdint>
#include <filesystem>
#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <unistd.h>

#include "xanchor/anchor_table.hpp"
#include "xanchor/embed_io.hpp"
#include "xanchor/lexicon.hpp"
#include "xanchor/matrix.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("xanchor_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline xanchor::RowMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  xanchor::RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Haar-ish rotation from QR of a Gaussian matrix, independent of the library.
inline xanchor::RowMatrix rotation(Eigen::Index d, std::mt19937_64& rng) {
  Eigen::MatrixXd g = gaussian(d, d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return q;
}

inline std::vector<xanchor::TokenRecord> random_records(std::size_t n, std::uint32_t dim,
                                                        std::uint32_t words, std::mt19937_64& rng) {
  std::normal_distribution<float> nf;
  std::vector<xanchor::TokenRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].word_id = static_cast<std::uint32_t>(rng() % words);
    out[i].context_id = static_cast<std::uint32_t>(i);
    out[i].vector.resize(dim);
    for (auto& v : out[i].vector) v = nf(rng);
  }
  return out;
}

inline xanchor::AnchorTable table_from(const xanchor::RowMatrix& m, const std::string& prefix) {
  xanchor::AnchorTable t(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    t.add(prefix + std::to_string(i), std::span<const double>(m.row(i).data(), static_cast<std::size_t>(m.cols())));
  }
  return t;
}

// Pair-counting ARI: a = pairs together in both, b/c = together in one only.
inline double ari_pairs(const std::vector<std::size_t>& x, const std::vector<std::size_t>& y) {
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const bool sx = x[i] == x[j], sy = y[i] == y[j];
      if (sx && sy) a += 1;
      else if (sx) b += 1;
      else if (sy) c += 1;
      else d += 1;
    }
  }
  const double den = (a + b) * (b + d) + (a + c) * (c + d);
  if (den == 0.0) return 1.0;
  return 2.0 * (a * d - b * c) / den;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Mean of the k largest values.
inline double top_mean(std::vector<double> v, std::size_t k) {
  std::sort(v.rbegin(), v.rend());
  k = std::min(k, v.size());
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) s += v[i];
  return s / static_cast<double>(k);
}

// Full score table for one query, collapsed to surfaces (best row wins,
// ties to the smaller row), sorted by score then row.
struct OracleHit {
  std::string surface;
  double score;
  std::size_t row;
};

inline std::vector<OracleHit> csls_oracle(std::span<const double> query, const xanchor::AnchorTable& mapped_source,
                                          const xanchor::AnchorTable& candidates, std::size_t knn) {
  std::vector<double> qc;
  for (std::size_t j = 0; j < candidates.size(); ++j) qc.push_back(cosine(query, candidates.vector(j)));
  const double rt = top_mean(qc, knn);
  std::vector<OracleHit> rows;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    std::vector<double> cs;
    for (std::size_t i = 0; i < mapped_source.size(); ++i) cs.push_back(cosine(candidates.vector(j), mapped_source.vector(i)));
    const double rs = top_mean(cs, knn);
    rows.push_back({std::string(xanchor::parent_surface(candidates.key(j))), 2 * qc[j] - rt - rs, j});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const OracleHit& a, const OracleHit& b) { return a.score > b.score; });
  std::vector<OracleHit> out;
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (seen.insert(r.surface).second) out.push_back(r);
  }
  return out;
}

inline std::vector<OracleHit> cosine_oracle(std::span<const double> query, const xanchor::AnchorTable& candidates) {
  std::vector<OracleHit> rows;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    rows.push_back({std::string(xanchor::parent_surface(candidates.key(j))), cosine(query, candidates.vector(j)), j});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const OracleHit& a, const OracleHit& b) { return a.score > b.score; });
  std::vector<OracleHit> out;
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (seen.insert(r.surface).second) out.push_back(r);
  }
  return out;
}

// Queries share a common direction; each has a noisy true translation and
// one extra candidate sits on the shared direction.
struct HubInstance {
  xanchor::AnchorTable queries;
  xanchor::AnchorTable candidates;
  std::string hub = "hub";
};

inline HubInstance hub_instance(std::uint64_t seed, std::size_t n = 200, Eigen::Index d = 16) {
  std::mt19937_64 rng(seed);
  Eigen::RowVectorXd mu = gaussian(1, d, rng);
  mu *= 6.0 / mu.norm();
  xanchor::RowMatrix q = gaussian(static_cast<Eigen::Index>(n), d, rng);
  q.rowwise() += mu;
  xanchor::RowMatrix y = q + 2.0 * gaussian(static_cast<Eigen::Index>(n), d, rng);
  HubInstance h;
  h.queries = table_from(q, "q");
  h.candidates = table_from(y, "y");
  h.candidates.add(h.hub, std::span<const double>(mu.data(), static_cast<std::size_t>(d)));
  return h;
}

// 9,496 pairs with list membership planted: exactly 335 pairs have a listed
// source word, 85 more have an inflected form of one.
struct PlantedDictionary {
  xanchor::BilingualLexicon lex;
  xanchor::MultiSenseList list;
  std::unordered_map<std::string, std::string> lemmas;
  std::size_t form_removed = 335;
  std::size_t lemma_removed = 335 + 85;
};

inline PlantedDictionary planted_dictionary(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PlantedDictionary p;
  auto target = [&] { return "f" + std::to_string(rng() % 20000); };
  std::vector<xanchor::LexiconPair> pairs;
  for (int i = 0; i < 200; ++i) p.list.words.insert("ms" + std::to_string(i));
  for (int i = 0; i < 335; ++i) pairs.push_back({"ms" + std::to_string(i < 200 ? i : rng() % 200), target()});
  for (int i = 0; i < 60; ++i) p.lemmas["ms" + std::to_string(i) + "s"] = "ms" + std::to_string(i);
  for (int i = 0; i < 85; ++i) pairs.push_back({"ms" + std::to_string(i < 60 ? i : rng() % 60) + "s", target()});
  // unlisted words, a quarter of them inflected forms of other unlisted words
  for (int i = 0; i < 1500; ++i) p.lemmas["w" + std::to_string(i) + "s"] = "w" + std::to_string(i);
  while (pairs.size() < 9496) {
    const auto w = rng() % 6000;
    std::string src = "w" + std::to_string(w) + (w < 1500 && rng() % 4 == 0 ? "s" : "");
    pairs.push_back({src, target()});
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  p.lex.pairs = std::move(pairs);
  return p;
}

}  // namespace testing
