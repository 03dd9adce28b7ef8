#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xanchor/anchor_table.hpp"
#include "xanchor/lexicon.hpp"
#include "xanchor/linear_map.hpp"

namespace xanchor {

/// Row i of x and y come from the same lexicon pair (keys[i]).
struct TrainingPairs {
  RowMatrix x;
  RowMatrix y;
  std::vector<std::pair<std::string, std::string>> keys;
  bool normalized = false;

  std::size_t size() const noexcept { return keys.size(); }
};

/// One row per lexicon pair, in order. A word with cluster rows contributes
/// every (cluster, target row) combination. Pairs without vectors are
/// skipped. With `normalize`, zero vectors raise DataError.
TrainingPairs build_pairs(const BilingualLexicon& lex, const AnchorTable& src,
                          const AnchorTable& tgt, bool normalize);

struct FitStats {
  double residual = 0.0;  ///< ||X W^T - Y||_F
  std::size_t rank = 0;
};

/// ||X W^T - Y||_F^2
double map_objective(const LinearMap& map, const TrainingPairs& pairs);

/// Minimum-norm least-squares map; warns when X is rank deficient.
LinearMap fit_least_squares(const TrainingPairs& pairs, FitStats* stats = nullptr);

/// W = U V^T from the SVD of Y^T X. Throws AmbiguityError when Y^T X is zero.
LinearMap fit_procrustes(const TrainingPairs& pairs, FitStats* stats = nullptr);

/// U V^T for a square matrix with the sign convention of fit_procrustes.
RowMatrix nearest_orthogonal(const RowMatrix& m);

}  // namespace xanchor
