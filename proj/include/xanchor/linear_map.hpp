#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "xanchor/anchor_table.hpp"
#include "xanchor/matrix.hpp"

namespace xanchor {

/// d x d map from source to target space: y = W x.
struct LinearMap {
  RowMatrix w;
  bool orthogonal = false;
  /// Whether the map was fitted on unit-normalized vectors.
  bool normalized = false;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(w.rows()); }

  static LinearMap identity(std::size_t dim);

  /// ||W^T W - I||_F
  double orthogonality_defect() const;

  std::vector<double> apply(std::span<const double> x) const;

  /// Maps every row, keeping keys, counts and order. DataError on dim mismatch.
  AnchorTable apply(const AnchorTable& table) const;

  bool operator==(const LinearMap& other) const;
};

/// Map file: "d", then d rows of d numbers, then "orthogonal: true|false"
/// and "normalized: true|false".
void write_map(const LinearMap& map, const std::filesystem::path& path);
LinearMap read_map(const std::filesystem::path& path);

}  // namespace xanchor
