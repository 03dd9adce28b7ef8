#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xanchor/matrix.hpp"

namespace xanchor {

/// Separator between a surface and its cluster index in sense-level keys.
inline constexpr char kClusterSeparator = '#';

/// "bank", 1 -> "bank#1".
std::string cluster_key(std::string_view surface, std::size_t index);

/// "bank#1" -> "bank"; keys without a cluster suffix are returned unchanged.
std::string_view parent_surface(std::string_view key);

/// "bank#1" -> 1; nullopt for plain surfaces.
std::optional<std::size_t> cluster_index(std::string_view key);

/// Ordered table of keyed dense vectors with occurrence counts.
///
/// Row order is vocabulary rank: row 0 is the most frequent entry. Keys are
/// either plain surfaces or cluster keys (`word#j`); a cluster row shares the
/// frequency rank of its parent word.
class AnchorTable {
 public:
  explicit AnchorTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }

  const std::string& key(std::size_t row) const { return keys_.at(row); }
  std::int64_t count(std::size_t row) const { return counts_.at(row); }
  std::span<const double> vector(std::size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }
  const std::vector<std::string>& keys() const noexcept { return keys_; }

  std::optional<std::size_t> find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key).has_value(); }

  /// Rows whose parent surface is `surface`: the plain row and/or its
  /// cluster rows, in table order.
  const std::vector<std::size_t>& rows_for_surface(
      std::string_view surface) const;
  bool has_surface(std::string_view surface) const {
    return !rows_for_surface(surface).empty();
  }

  /// Appends a row. Throws DataError on duplicate key, wrong length,
  /// non-finite component, or count < 1.
  void add(std::string key, std::span<const double> vec, std::int64_t count = 1);
  void add(std::string key, std::span<const float> vec, std::int64_t count = 1);

  /// Copies every row for which `keep(row)` is true, preserving order.
  template <typename Pred>
  AnchorTable filtered(Pred keep) const {
    AnchorTable out(dim_);
    for (std::size_t i = 0; i < size(); ++i) {
      if (keep(i)) out.add(keys_[i], vector(i), counts_[i]);
    }
    return out;
  }

  /// First `n` rows (or all of them).
  AnchorTable head(std::size_t n) const;

  /// Copy of the rows as an n x dim matrix.
  RowMatrix matrix() const;

  bool operator==(const AnchorTable& other) const;

 private:
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::vector<std::int64_t> counts_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_surface_;
};

}  // namespace xanchor
