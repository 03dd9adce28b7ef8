#include "xanchor/anchor_table.hpp"

#include <charconv>
#include <cmath>

#include "xanchor/error.hpp"

namespace xanchor {

std::string cluster_key(std::string_view surface, std::size_t index) {
  std::string key(surface);
  key += kClusterSeparator;
  key += std::to_string(index);
  return key;
}

std::optional<std::size_t> cluster_index(std::string_view key) {
  const auto pos = key.rfind(kClusterSeparator);
  if (pos == std::string_view::npos || pos + 1 == key.size()) {
    return std::nullopt;
  }
  std::size_t value = 0;
  const char* first = key.data() + pos + 1;
  const char* last = key.data() + key.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

std::string_view parent_surface(std::string_view key) {
  if (!cluster_index(key)) return key;
  return key.substr(0, key.rfind(kClusterSeparator));
}

std::optional<std::size_t> AnchorTable::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::size_t>& AnchorTable::rows_for_surface(
    std::string_view surface) const {
  static const std::vector<std::size_t> kNone;
  auto it = by_surface_.find(std::string(surface));
  return it == by_surface_.end() ? kNone : it->second;
}

void AnchorTable::add(std::string key, std::span<const double> vec,
                      std::int64_t count) {
  if (vec.size() != dim_) {
    throw DataError("row '" + key + "' has length " +
                        std::to_string(vec.size()) + ", table dim is " +
                        std::to_string(dim_),
                    size());
  }
  if (count < 1) {
    throw DataError("row '" + key + "' has count < 1", size());
  }
  for (double v : vec) {
    if (!std::isfinite(v)) {
      throw DataError("row '" + key + "' has a non-finite component", size());
    }
  }
  if (index_.contains(key)) {
    throw DataError("duplicate key '" + key + "'", size());
  }
  const std::size_t row = keys_.size();
  index_.emplace(key, row);
  by_surface_[std::string(parent_surface(key))].push_back(row);
  keys_.push_back(std::move(key));
  counts_.push_back(count);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

void AnchorTable::add(std::string key, std::span<const float> vec,
                      std::int64_t count) {
  std::vector<double> wide(vec.begin(), vec.end());
  add(std::move(key), std::span<const double>(wide), count);
}

AnchorTable AnchorTable::head(std::size_t n) const {
  return filtered([n](std::size_t row) { return row < n; });
}

RowMatrix AnchorTable::matrix() const {
  RowMatrix m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dim_));
  if (!data_.empty()) {
    std::copy(data_.begin(), data_.end(), m.data());
  }
  return m;
}

bool AnchorTable::operator==(const AnchorTable& other) const {
  return dim_ == other.dim_ && keys_ == other.keys_ &&
         counts_ == other.counts_ && data_ == other.data_;
}

}  // namespace xanchor
