#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xanchor/anchor_table.hpp"
#include "xanchor/embed_io.hpp"

namespace xanchor {

/// Streaming per-word sums and counts of token embeddings.
///
/// Sums are kept in 64-bit floats. Merging adds sums and counts, so shards
/// can be accumulated independently and combined in any order.
class AnchorAccumulator {
 public:
  explicit AnchorAccumulator(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }

  void add(const TokenRecord& record) { add(record.word_id, record.vector); }
  void add(std::uint32_t word_id, std::span<const float> vec);

  /// Adds `other` into this accumulator. Throws DataError on a dim mismatch.
  void merge(const AnchorAccumulator& other);

  std::int64_t count(std::uint32_t word_id) const;
  std::span<const double> sum(std::uint32_t word_id) const;
  /// Number of distinct words with at least one token.
  std::size_t words() const;

  /// Mean vector for every word with count >= min_count, in word-id
  /// (frequency rank) order, keyed by surface.
  AnchorTable finalize(const Vocab& vocab, std::int64_t min_count = 1) const;

 private:
  void ensure(std::uint32_t word_id);

  std::size_t dim_;
  std::vector<double> sums_;          // word_id * dim_ + k
  std::vector<std::int64_t> counts_;  // indexed by word_id
};

AnchorAccumulator merged(const AnchorAccumulator& a, const AnchorAccumulator& b);

/// Accumulates `records` split into `shards` contiguous shards, one per
/// OpenMP task, merged in shard order. The result depends on the shard count
/// only, never on the thread count.
AnchorAccumulator accumulate_sharded(std::span<const TokenRecord> records,
                                     std::size_t dim, std::size_t shards);

/// Streams a token file into a fresh accumulator.
AnchorAccumulator accumulate_file(const std::filesystem::path& tokens);

}  // namespace xanchor
