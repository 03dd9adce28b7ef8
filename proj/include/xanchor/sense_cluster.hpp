#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xanchor/anchor_table.hpp"
#include "xanchor/embed_io.hpp"

namespace xanchor {

struct ClusterParams {
  std::size_t min_tokens = 160;    ///< below this the plain anchor is kept
  std::size_t max_sample = 10000;  ///< uniform sample cap before clustering
  std::size_t k_max = 10;
  /// Points entering the eigendecomposition; the rest of the sample is
  /// assigned to the nearest cluster centroid afterwards.
  std::size_t eigen_cap = 2000;
  /// Fraction of each affinity row kept by row-wise thresholding.
  double keep_fraction = 0.1;
  int kmeans_restarts = 20;
  int kmeans_iterations = 100;
};

/// Sense clusters of one word's tokens.
///
/// Cluster indices are canonical: ordered by size (largest first), ties by
/// the smallest member context id. `cluster_anchors[j]` is the mean of the
/// tokens assigned to cluster j.
struct ClusterModel {
  std::string word;
  std::size_t k = 1;
  std::vector<std::pair<std::uint32_t, std::size_t>> assignments;  // (context id, cluster)
  std::vector<std::vector<double>> cluster_anchors;
  std::vector<std::int64_t> cluster_sizes;
  bool sampled = false;
  std::size_t sample_size = 0;
  std::size_t token_count = 0;
  /// Smallest normalized-Laplacian eigenvalues used for the eigengap.
  std::vector<double> eigenvalues;
};

/// Input unchanged when it already fits; otherwise a uniform sample without
/// replacement of exactly `max_sample` tokens, deterministic per seed and
/// independent of input order.
std::vector<TokenRecord> sample_tokens(std::span<const TokenRecord> tokens,
                                       std::size_t max_sample,
                                       std::uint64_t seed);

/// argmax_j (l[j+1] - l[j]) for j in [1, k_max] (1-based); ties go to the
/// smaller j. Fewer than two eigenvalues gives 1.
std::size_t choose_k_eigengap(std::span<const double> ascending,
                              std::size_t k_max);

/// Eigenvalues (ascending) of L = I - D^-1/2 A D^-1/2.
std::vector<double> normalized_laplacian_spectrum(const RowMatrix& affinity);

/// Spectral clustering of one word's tokens. Throws IneligibleError below
/// params.min_tokens and DataError on mixed dimensions.
ClusterModel cluster_word(const std::string& word,
                          std::span<const TokenRecord> tokens,
                          const ClusterParams& params, std::uint64_t seed);

/// Replaces each clustered word's row by rows `word#0..word#k-1` at the same
/// position. Models with k = 1 leave the table unchanged. Throws KeyError if
/// a model's word has no row.
AnchorTable replace_with_cluster_anchors(const AnchorTable& table,
                                         std::span<const ClusterModel> models);

/// Adjusted Rand index between two labelings of the same points.
double adjusted_rand_index(std::span<const std::size_t> a,
                           std::span<const std::size_t> b);

nlohmann::json to_json(const ClusterModel& model);

}  // namespace xanchor
