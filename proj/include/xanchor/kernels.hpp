#pragma once

// Data-parallel inner loops shared by retrieval, CSLS and spectral
// clustering. Every kernel exists twice: `serial::` is the straightforward
// reference kept for testing, `omp::` is the OpenMP version used by the
// library. The OpenMP versions split work into fixed-size row blocks and
// never reduce across threads, so their output does not depend on the
// thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xanchor/matrix.hpp"

namespace xanchor::kernels {

/// Per-row top-k selection result, row-major `rows x k`.
struct TopK {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> score;

  std::uint32_t at(std::size_t row, std::size_t j) const { return index[row * k + j]; }
  double score_at(std::size_t row, std::size_t j) const { return score[row * k + j]; }
};

/// Copy of `m` with unit-norm rows; zero rows stay zero.
RowMatrix normalized_rows(const RowMatrix& m);

namespace serial {

/// Mean of the k largest inner products <a_i, b_j> over j, for every row i.
std::vector<double> topk_mean_dot(const RowMatrix& a, const RowMatrix& b,
                                  std::size_t k);

/// For every row i, the k columns j with the largest
///   score(i, j) = scale * <a_i, b_j> - bias[j]
/// (bias may be empty), best first, ties broken by smaller j.
TopK topk_scores(const RowMatrix& a, const RowMatrix& b, std::size_t k,
                 double scale, std::span<const double> bias);

/// Spectral affinity: (1 + cos) / 2 between rows of x, row-wise
/// thresholded to the `keep` largest entries (entries equal to the keep-th
/// value survive), then symmetrized by element-wise max.
RowMatrix refined_affinity(const RowMatrix& x, std::size_t keep);

/// Dense product a * v.
RowMatrix multiply(const RowMatrix& a, const RowMatrix& v);

}  // namespace serial

namespace omp {

std::vector<double> topk_mean_dot(const RowMatrix& a, const RowMatrix& b,
                                  std::size_t k);
TopK topk_scores(const RowMatrix& a, const RowMatrix& b, std::size_t k,
                 double scale, std::span<const double> bias);
RowMatrix refined_affinity(const RowMatrix& x, std::size_t keep);
RowMatrix multiply(const RowMatrix& a, const RowMatrix& v);

}  // namespace omp

/// Row block size of the OpenMP kernels.
inline constexpr std::size_t kRowBlock = 128;

}  // namespace xanchor::kernels
