#include "xanchor/sense_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "xanchor/error.hpp"
#include "xanchor/kernels.hpp"

namespace xanchor {
namespace {

constexpr std::uint64_t kSubsetSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kSubspaceSalt = 0xC2B2AE3D27D4EB4FULL;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

bool canonical_less(const TokenRecord& a, const TokenRecord& b) {
  if (a.context_id != b.context_id) return a.context_id < b.context_id;
  if (a.word_id != b.word_id) return a.word_id < b.word_id;
  return a.vector < b.vector;
}

/// Sorted ascending indices of a uniform `m`-subset of [0, n).
std::vector<std::size_t> uniform_subset(std::size_t n, std::size_t m,
                                        std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

RowMatrix to_matrix(std::span<const TokenRecord> tokens, std::size_t dim) {
  RowMatrix x(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t c = 0; c < dim; ++c) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = tokens[i].vector[c];
    }
  }
  return x;
}

RowMatrix normalized_adjacency(const RowMatrix& affinity) {
  const Eigen::VectorXd degree = affinity.rowwise().sum();
  Eigen::VectorXd scale(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    scale(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  return scale.asDiagonal() * affinity * scale.asDiagonal();
}

/// Eigenvectors of the `k` largest eigenvalues of the symmetric matrix `a`,
/// by block subspace iteration with Rayleigh-Ritz. `a` must be positive
/// semidefinite (callers pass a shifted matrix).
RowMatrix top_eigenvectors(const RowMatrix& a, std::size_t k, std::uint64_t seed) {
  const auto n = a.rows();
  const auto block = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(k) + 4);
  std::mt19937_64 rng(seed ^ kSubspaceSalt);
  RowMatrix q(n, block);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = uniform01(rng) - 0.5;
  q = Eigen::HouseholderQR<RowMatrix>(q).householderQ() * RowMatrix::Identity(n, block);

  Eigen::VectorXd previous = Eigen::VectorXd::Constant(block, std::numeric_limits<double>::infinity());
  RowMatrix ritz;
  constexpr int kMaxIterations = 500;
  for (int it = 0; it < kMaxIterations; ++it) {
    const RowMatrix z = kernels::omp::multiply(a, q);
    Eigen::MatrixXd h = q.transpose() * z;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    // Descending order.
    const Eigen::VectorXd theta = es.eigenvalues().reverse();
    const Eigen::MatrixXd s = es.eigenvectors().rowwise().reverse();
    const double change =
        (theta.head(static_cast<Eigen::Index>(k)) - previous.head(static_cast<Eigen::Index>(k)))
            .cwiseAbs()
            .maxCoeff();
    ritz = q * s;
    if (change < 1e-11) break;
    previous = theta;
    const RowMatrix next = z * s;
    q = Eigen::HouseholderQR<RowMatrix>(next).householderQ() * RowMatrix::Identity(n, block);
  }
  return ritz.leftCols(static_cast<Eigen::Index>(k));
}

struct KMeansResult {
  std::vector<std::size_t> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

double squared_distance(const RowMatrix& x, Eigen::Index i, const RowMatrix& c,
                        Eigen::Index j) {
  return (x.row(i) - c.row(j)).squaredNorm();
}

KMeansResult kmeans_once(const RowMatrix& x, std::size_t k, int iterations,
                         std::mt19937_64& rng) {
  const auto n = x.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  RowMatrix centers(kk, x.cols());
  // k-means++ seeding.
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  centers.row(0) = x.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))));
  for (Eigen::Index c = 1; c < kk; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], squared_distance(x, i, centers, c - 1));
      total += dist[i];
    }
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= dist[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n)));
    }
    centers.row(c) = x.row(chosen);
  }

  KMeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> sizes(k);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(x, i, centers, 0);
      for (Eigen::Index c = 1; c < kk; ++c) {
        const double d = squared_distance(x, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::size_t>(c);
        }
      }
      if (it == 0 || result.labels[i] != best) changed = true;
      result.labels[i] = best;
    }
    // Re-seed empty clusters with the point farthest from its center.
    std::fill(sizes.begin(), sizes.end(), 0);
    for (auto l : result.labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto l = result.labels[i];
        if (sizes[l] < 2) continue;
        const double d = squared_distance(x, i, centers, static_cast<Eigen::Index>(l));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) break;
      --sizes[result.labels[far]];
      result.labels[far] = c;
      sizes[c] = 1;
      changed = true;
    }
    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centers.row(static_cast<Eigen::Index>(result.labels[i])) += x.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) centers.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
    }
    if (!changed) break;
  }
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    result.inertia += squared_distance(x, i, centers, static_cast<Eigen::Index>(result.labels[i]));
  }
  return result;
}

std::vector<std::size_t> kmeans(const RowMatrix& x, std::size_t k, int restarts,
                                int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KMeansResult best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    auto candidate = kmeans_once(x, k, iterations, rng);
    if (candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best.labels;
}

/// Renumbers labels by cluster size (descending), ties by first occurrence.
/// Returns the number of non-empty clusters.
std::size_t canonicalize(std::vector<std::size_t>& labels) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> info;  // label -> (size, first)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = info.try_emplace(labels[i], 0, i);
    ++it->second.first;
  }
  std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> order(info.begin(), info.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::unordered_map<std::size_t, std::size_t> remap;
  for (std::size_t j = 0; j < order.size(); ++j) remap[order[j].first] = j;
  for (auto& l : labels) l = remap[l];
  return order.size();
}

}  // namespace

std::vector<TokenRecord> sample_tokens(std::span<const TokenRecord> tokens,
                                       std::size_t max_sample,
                                       std::uint64_t seed) {
  if (tokens.size() <= max_sample) {
    return {tokens.begin(), tokens.end()};
  }
  std::vector<TokenRecord> sorted(tokens.begin(), tokens.end());
  std::sort(sorted.begin(), sorted.end(), canonical_less);
  std::mt19937_64 rng(seed);
  const auto picked = uniform_subset(sorted.size(), max_sample, rng);
  std::vector<TokenRecord> out;
  out.reserve(picked.size());
  for (auto i : picked) out.push_back(std::move(sorted[i]));
  return out;
}

std::size_t choose_k_eigengap(std::span<const double> ascending, std::size_t k_max) {
  if (ascending.size() < 2 || k_max < 1) return 1;
  const std::size_t last = std::min(k_max, ascending.size() - 1);
  std::vector<double> gaps(last);
  for (std::size_t j = 1; j <= last; ++j) gaps[j - 1] = ascending[j] - ascending[j - 1];
  const double best = *std::max_element(gaps.begin(), gaps.end());
  // Round-off sized differences count as ties.
  constexpr double kTieTolerance = 1e-12;
  for (std::size_t j = 1; j <= last; ++j) {
    if (gaps[j - 1] >= best - kTieTolerance) return j;
  }
  return 1;
}

std::vector<double> normalized_laplacian_spectrum(const RowMatrix& affinity) {
  const auto n = affinity.rows();
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Identity(n, n) - normalized_adjacency(affinity);
  laplacian = 0.5 * (laplacian + laplacian.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian, Eigen::EigenvaluesOnly);
  const auto& values = es.eigenvalues();
  return {values.data(), values.data() + values.size()};
}

ClusterModel cluster_word(const std::string& word,
                          std::span<const TokenRecord> tokens,
                          const ClusterParams& params, std::uint64_t seed) {
  if (tokens.size() < params.min_tokens) {
    throw IneligibleError("word '" + word + "' has " + std::to_string(tokens.size()) +
                          " tokens, fewer than " + std::to_string(params.min_tokens));
  }
  if (tokens.empty()) throw IneligibleError("word '" + word + "' has no tokens");
  const std::size_t dim = tokens.front().vector.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].vector.size() != dim) {
      throw DataError("token " + std::to_string(i) + " of '" + word + "' has length " +
                          std::to_string(tokens[i].vector.size()) + ", expected " +
                          std::to_string(dim),
                      i);
    }
  }

  ClusterModel model;
  model.word = word;
  model.token_count = tokens.size();
  std::vector<TokenRecord> sample = sample_tokens(tokens, params.max_sample, seed);
  model.sampled = sample.size() < tokens.size();
  model.sample_size = sample.size();
  std::sort(sample.begin(), sample.end(), canonical_less);
  const auto n = sample.size();

  std::vector<std::size_t> labels(n, 0);
  const bool identical = std::all_of(sample.begin(), sample.end(), [&](const TokenRecord& t) {
    return t.vector == sample.front().vector;
  });

  if (!identical && n >= 2) {
    std::vector<std::size_t> subset(n);
    std::iota(subset.begin(), subset.end(), std::size_t{0});
    if (n > params.eigen_cap) {
      std::mt19937_64 rng(seed ^ kSubsetSalt);
      subset = uniform_subset(n, params.eigen_cap, rng);
    }
    std::vector<TokenRecord> points;
    points.reserve(subset.size());
    for (auto i : subset) points.push_back(sample[i]);
    const RowMatrix x = to_matrix(points, dim);
    const auto m = static_cast<std::size_t>(x.rows());
    const auto keep = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(params.keep_fraction * static_cast<double>(m))), 1, m);
    const RowMatrix affinity = kernels::omp::refined_affinity(x, keep);
    const auto spectrum = normalized_laplacian_spectrum(affinity);
    const std::size_t shown = std::min(spectrum.size(), params.k_max + 1);
    model.eigenvalues.assign(spectrum.begin(), spectrum.begin() + static_cast<long>(shown));
    std::size_t k = choose_k_eigengap(model.eigenvalues, std::min(params.k_max, m - 1));

    std::vector<std::size_t> sub_labels(m, 0);
    if (k >= 2) {
      RowMatrix shifted = normalized_adjacency(affinity);
      shifted.diagonal().array() += 1.0;
      RowMatrix embedding = kernels::normalized_rows(top_eigenvectors(shifted, k, seed));
      sub_labels = kmeans(embedding, k, params.kmeans_restarts, params.kmeans_iterations, seed);
    }

    if (m == n) {
      labels = sub_labels;
    } else {
      // Nearest-centroid assignment of the points left out of the eigensolve.
      const std::size_t kk = canonicalize(sub_labels);
      RowMatrix centroids = RowMatrix::Zero(static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(dim));
      std::vector<std::size_t> sizes(kk, 0);
      for (std::size_t i = 0; i < m; ++i) {
        centroids.row(static_cast<Eigen::Index>(sub_labels[i])) += x.row(static_cast<Eigen::Index>(i));
        ++sizes[sub_labels[i]];
      }
      for (std::size_t c = 0; c < kk; ++c) centroids.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
      std::vector<bool> in_subset(n, false);
      for (std::size_t i = 0; i < m; ++i) {
        in_subset[subset[i]] = true;
        labels[subset[i]] = sub_labels[i];
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (in_subset[i]) continue;
        Eigen::Map<const Eigen::VectorXf> v(sample[i].vector.data(), static_cast<Eigen::Index>(dim));
        const Eigen::RowVectorXd vd = v.cast<double>().transpose();
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < kk; ++c) {
          const double d = (centroids.row(static_cast<Eigen::Index>(c)) - vd).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
        labels[i] = best;
      }
    }
  }

  model.k = canonicalize(labels);
  model.cluster_sizes.assign(model.k, 0);
  std::vector<std::vector<double>> sums(model.k, std::vector<double>(dim, 0.0));
  model.assignments.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    model.assignments.emplace_back(sample[i].context_id, labels[i]);
    ++model.cluster_sizes[labels[i]];
    for (std::size_t c = 0; c < dim; ++c) sums[labels[i]][c] += sample[i].vector[c];
  }
  model.cluster_anchors.resize(model.k);
  for (std::size_t j = 0; j < model.k; ++j) {
    model.cluster_anchors[j].resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      model.cluster_anchors[j][c] = sums[j][c] / static_cast<double>(model.cluster_sizes[j]);
    }
  }
  return model;
}

AnchorTable replace_with_cluster_anchors(const AnchorTable& table,
                                         std::span<const ClusterModel> models) {
  std::unordered_map<std::string, const ClusterModel*> by_word;
  for (const auto& m : models) {
    if (!table.contains(m.word)) {
      throw KeyError("no anchor row for clustered word '" + m.word + "'");
    }
    if (m.k >= 2) by_word[m.word] = &m;
  }
  AnchorTable out(table.dim());
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto it = by_word.find(table.key(i));
    if (it == by_word.end()) {
      out.add(table.key(i), table.vector(i), table.count(i));
      continue;
    }
    const ClusterModel& m = *it->second;
    for (std::size_t j = 0; j < m.k; ++j) {
      out.add(cluster_key(m.word, j), std::span<const double>(m.cluster_anchors[j]),
              m.cluster_sizes[j]);
    }
  }
  return out;
}

double adjusted_rand_index(std::span<const std::size_t> a,
                           std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw DataError("labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows;
  std::map<std::size_t, double> cols;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [key, c] : joint) index += pairs(c);
  double sum_rows = 0.0;
  for (const auto& [key, c] : rows) sum_rows += pairs(c);
  double sum_cols = 0.0;
  for (const auto& [key, c] : cols) sum_cols += pairs(c);
  const double total = pairs(static_cast<double>(n));
  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

nlohmann::json to_json(const ClusterModel& model) {
  nlohmann::json assignments = nlohmann::json::array();
  for (const auto& [ctx, cluster] : model.assignments) {
    assignments.push_back({ctx, cluster});
  }
  return {
      {"word", model.word},
      {"k", model.k},
      {"token_count", model.token_count},
      {"sampled", model.sampled},
      {"sample_size", model.sample_size},
      {"cluster_sizes", model.cluster_sizes},
      {"eigenvalues", model.eigenvalues},
      {"assignments", assignments},
  };
}

}  // namespace xanchor
