#include "xanchor/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xanchor::kernels {
namespace {

// Orders candidate columns best-first: higher score, then smaller index.
struct Better {
  const double* score;
  bool operator()(std::uint32_t x, std::uint32_t y) const {
    if (score[x] != score[y]) return score[x] > score[y];
    return x < y;
  }
};

void select_row(const double* scores, std::size_t n, std::size_t k,
                std::vector<std::uint32_t>& order, std::uint32_t* out_index,
                double* out_score) {
  order.resize(n);
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), Better{scores});
  for (std::size_t j = 0; j < k; ++j) {
    out_index[j] = order[j];
    out_score[j] = scores[order[j]];
  }
}

double mean_of_largest(std::vector<double>& values, std::size_t k) {
  std::partial_sort(values.begin(), values.begin() + static_cast<long>(k),
                    values.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += values[j];
  return sum / static_cast<double>(k);
}

void threshold_row(double* row, std::size_t n, std::size_t keep,
                   std::vector<double>& scratch) {
  if (keep >= n) return;
  scratch.assign(row, row + n);
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<long>(keep - 1),
                   scratch.end(), std::greater<>());
  const double cut = scratch[keep - 1];
  for (std::size_t j = 0; j < n; ++j) {
    if (row[j] < cut) row[j] = 0.0;
  }
}

void symmetrize_max(RowMatrix& a) {
  const auto n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double m = std::max(a(i, j), a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  }
}

}  // namespace

RowMatrix normalized_rows(const RowMatrix& m) {
  RowMatrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace serial {

std::vector<double> topk_mean_dot(const RowMatrix& a, const RowMatrix& b,
                                  std::size_t k) {
  const auto n = static_cast<std::size_t>(b.rows());
  k = std::min(k, n);
  std::vector<double> out(static_cast<std::size_t>(a.rows()), 0.0);
  if (k == 0) return out;
  std::vector<double> dots(n);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) s += a(i, c) * b(static_cast<Eigen::Index>(j), c);
      dots[j] = s;
    }
    out[static_cast<std::size_t>(i)] = mean_of_largest(dots, k);
  }
  return out;
}

TopK topk_scores(const RowMatrix& a, const RowMatrix& b, std::size_t k,
                 double scale, std::span<const double> bias) {
  const auto n = static_cast<std::size_t>(b.rows());
  TopK out;
  out.rows = static_cast<std::size_t>(a.rows());
  out.k = std::min(k, n);
  out.index.resize(out.rows * out.k);
  out.score.resize(out.rows * out.k);
  std::vector<double> scores(n);
  std::vector<std::uint32_t> order;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        s += a(static_cast<Eigen::Index>(i), c) * b(static_cast<Eigen::Index>(j), c);
      }
      scores[j] = scale * s - (bias.empty() ? 0.0 : bias[j]);
    }
    select_row(scores.data(), n, out.k, order, out.index.data() + i * out.k,
               out.score.data() + i * out.k);
  }
  return out;
}

RowMatrix refined_affinity(const RowMatrix& x, std::size_t keep) {
  const RowMatrix u = normalized_rows(x);
  const auto n = u.rows();
  RowMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < u.cols(); ++c) s += u(i, c) * u(j, c);
      a(i, j) = 0.5 * (1.0 + s);
    }
  }
  std::vector<double> scratch;
  for (Eigen::Index i = 0; i < n; ++i) {
    threshold_row(a.row(i).data(), static_cast<std::size_t>(n), keep, scratch);
  }
  symmetrize_max(a);
  return a;
}

RowMatrix multiply(const RowMatrix& a, const RowMatrix& v) {
  RowMatrix out = RowMatrix::Zero(a.rows(), v.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < a.cols(); ++j) s += a(i, j) * v(j, c);
      out(i, c) = s;
    }
  }
  return out;
}

}  // namespace serial

// ---------------------------------------------------------------------------

namespace omp {
namespace {

long block_count(Eigen::Index rows) {
  return static_cast<long>((static_cast<std::size_t>(rows) + kRowBlock - 1) / kRowBlock);
}

}  // namespace

std::vector<double> topk_mean_dot(const RowMatrix& a, const RowMatrix& b,
                                  std::size_t k) {
  const auto n = static_cast<std::size_t>(b.rows());
  k = std::min(k, n);
  std::vector<double> out(static_cast<std::size_t>(a.rows()), 0.0);
  if (k == 0) return out;
  const long blocks = block_count(a.rows());
#pragma omp parallel
  {
    RowMatrix scores;
    std::vector<double> row;
#pragma omp for schedule(dynamic)
    for (long blk = 0; blk < blocks; ++blk) {
      const auto begin = static_cast<Eigen::Index>(blk * static_cast<long>(kRowBlock));
      const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(kRowBlock), a.rows() - begin);
      scores.noalias() = a.middleRows(begin, len) * b.transpose();
      for (Eigen::Index r = 0; r < len; ++r) {
        row.assign(scores.row(r).data(), scores.row(r).data() + n);
        out[static_cast<std::size_t>(begin + r)] = mean_of_largest(row, k);
      }
    }
  }
  return out;
}

TopK topk_scores(const RowMatrix& a, const RowMatrix& b, std::size_t k,
                 double scale, std::span<const double> bias) {
  const auto n = static_cast<std::size_t>(b.rows());
  TopK out;
  out.rows = static_cast<std::size_t>(a.rows());
  out.k = std::min(k, n);
  out.index.resize(out.rows * out.k);
  out.score.resize(out.rows * out.k);
  if (out.k == 0) return out;
  const long blocks = block_count(a.rows());
#pragma omp parallel
  {
    RowMatrix scores;
    std::vector<std::uint32_t> order;
#pragma omp for schedule(dynamic)
    for (long blk = 0; blk < blocks; ++blk) {
      const auto begin = static_cast<Eigen::Index>(blk * static_cast<long>(kRowBlock));
      const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(kRowBlock), a.rows() - begin);
      scores.noalias() = a.middleRows(begin, len) * b.transpose();
      for (Eigen::Index r = 0; r < len; ++r) {
        double* row = scores.row(r).data();
        for (std::size_t j = 0; j < n; ++j) {
          row[j] = scale * row[j] - (bias.empty() ? 0.0 : bias[j]);
        }
        const auto i = static_cast<std::size_t>(begin + r);
        select_row(row, n, out.k, order, out.index.data() + i * out.k,
                   out.score.data() + i * out.k);
      }
    }
  }
  return out;
}

RowMatrix refined_affinity(const RowMatrix& x, std::size_t keep) {
  const RowMatrix u = normalized_rows(x);
  const auto n = u.rows();
  RowMatrix a(n, n);
  const long blocks = block_count(n);
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic)
    for (long blk = 0; blk < blocks; ++blk) {
      const auto begin = static_cast<Eigen::Index>(blk * static_cast<long>(kRowBlock));
      const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(kRowBlock), n - begin);
      a.middleRows(begin, len).noalias() = u.middleRows(begin, len) * u.transpose();
      for (Eigen::Index r = begin; r < begin + len; ++r) {
        auto row = a.row(r);
        row = (row.array() + 1.0) * 0.5;
        threshold_row(row.data(), static_cast<std::size_t>(n), keep, scratch);
      }
    }
  }
  symmetrize_max(a);
  return a;
}

RowMatrix multiply(const RowMatrix& a, const RowMatrix& v) {
  RowMatrix out(a.rows(), v.cols());
  const long blocks = block_count(a.rows());
#pragma omp parallel for schedule(static)
  for (long blk = 0; blk < blocks; ++blk) {
    const auto begin = static_cast<Eigen::Index>(blk * static_cast<long>(kRowBlock));
    const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(kRowBlock), a.rows() - begin);
    out.middleRows(begin, len).noalias() = a.middleRows(begin, len) * v;
  }
  return out;
}

}  // namespace omp
}  // namespace xanchor::kernels
