#include "xanchor/align_supervised.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "xanchor/error.hpp"
#include "xanchor/log.hpp"

namespace xanchor {

TrainingPairs build_pairs(const BilingualLexicon& lex, const AnchorTable& src,
                          const AnchorTable& tgt, bool normalize) {
  if (src.dim() != tgt.dim()) {
    throw DataError("source dim " + std::to_string(src.dim()) + " != target dim " +
                    std::to_string(tgt.dim()));
  }
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  TrainingPairs pairs;
  pairs.normalized = normalize;
  for (const auto& p : lex.pairs) {
    for (auto s : src.rows_for_surface(p.source)) {
      for (auto t : tgt.rows_for_surface(p.target)) {
        rows.emplace_back(s, t);
        pairs.keys.emplace_back(src.key(s), tgt.key(t));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(src.dim());
  pairs.x.resize(n, d);
  pairs.y.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto sv = src.vector(rows[i].first);
    auto tv = tgt.vector(rows[i].second);
    for (Eigen::Index c = 0; c < d; ++c) {
      pairs.x(i, c) = sv[c];
      pairs.y(i, c) = tv[c];
    }
    if (normalize) {
      const double nx = pairs.x.row(i).norm();
      const double ny = pairs.y.row(i).norm();
      if (nx == 0.0) throw DataError("zero vector for source word '" + pairs.keys[i].first + "'", i);
      if (ny == 0.0) throw DataError("zero vector for target word '" + pairs.keys[i].second + "'", i);
      pairs.x.row(i) /= nx;
      pairs.y.row(i) /= ny;
    }
  }
  return pairs;
}

double map_objective(const LinearMap& map, const TrainingPairs& pairs) {
  return (pairs.x * map.w.transpose() - pairs.y).squaredNorm();
}

LinearMap fit_least_squares(const TrainingPairs& pairs, FitStats* stats) {
  if (pairs.size() == 0) throw DataError("no training pairs");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Eigen::MatrixXd(pairs.x));
  const auto rank = static_cast<std::size_t>(cod.rank());
  if (rank < static_cast<std::size_t>(pairs.x.cols())) {
    warn("least squares: source matrix has rank " + std::to_string(rank) + " < " +
         std::to_string(pairs.x.cols()) + "; using the minimum-norm solution");
  }
  const Eigen::MatrixXd wt = cod.solve(Eigen::MatrixXd(pairs.y));
  LinearMap map;
  map.w = wt.transpose();
  map.normalized = pairs.normalized;
  if (stats) {
    stats->rank = rank;
    stats->residual = std::sqrt(map_objective(map, pairs));
  }
  return map;
}

RowMatrix nearest_orthogonal(const RowMatrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd u = svd.matrixU();
  Eigen::MatrixXd v = svd.matrixV();
  // Largest-magnitude entry of each U column positive; V follows.
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index r = 0;
    u.col(c).cwiseAbs().maxCoeff(&r);
    if (u(r, c) < 0.0) {
      u.col(c) *= -1.0;
      v.col(c) *= -1.0;
    }
  }
  return u * v.transpose();
}

LinearMap fit_procrustes(const TrainingPairs& pairs, FitStats* stats) {
  if (pairs.size() == 0) throw DataError("no training pairs");
  // Accumulate Y^T X in a canonical row order so the result does not depend
  // on the order of the pairs.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pairs.x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < pairs.x.cols(); ++c) {
      if (pairs.x(a, c) != pairs.x(b, c)) return pairs.x(a, c) < pairs.x(b, c);
    }
    for (Eigen::Index c = 0; c < pairs.y.cols(); ++c) {
      if (pairs.y(a, c) != pairs.y(b, c)) return pairs.y(a, c) < pairs.y(b, c);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  RowMatrix m = RowMatrix::Zero(pairs.y.cols(), pairs.x.cols());
  for (auto i : order) m.noalias() += pairs.y.row(i).transpose() * pairs.x.row(i);
  const double scale = pairs.x.norm() * pairs.y.norm();
  if (!(m.norm() > 1e-12 * scale) || scale == 0.0) {
    throw AmbiguityError("Y^T X is zero; every orthogonal map is optimal");
  }
  LinearMap map;
  map.w = nearest_orthogonal(m);
  map.orthogonal = true;
  map.normalized = pairs.normalized;
  if (stats) {
    stats->rank = static_cast<std::size_t>(Eigen::FullPivLU<Eigen::MatrixXd>(Eigen::MatrixXd(pairs.x)).rank());
    stats->residual = std::sqrt(map_objective(map, pairs));
  }
  return map;
}

}  // namespace xanchor
