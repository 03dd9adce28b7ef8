#include "xanchor/anchors.hpp"

#include <algorithm>

#include "xanchor/error.hpp"

namespace xanchor {

void AnchorAccumulator::ensure(std::uint32_t word_id) {
  if (word_id >= counts_.size()) {
    counts_.resize(static_cast<std::size_t>(word_id) + 1, 0);
    sums_.resize(counts_.size() * dim_, 0.0);
  }
}

void AnchorAccumulator::add(std::uint32_t word_id, std::span<const float> vec) {
  if (vec.size() != dim_) {
    throw DataError("token for word " + std::to_string(word_id) + " has length " +
                    std::to_string(vec.size()) + ", accumulator dim is " +
                    std::to_string(dim_));
  }
  ensure(word_id);
  double* sum = sums_.data() + static_cast<std::size_t>(word_id) * dim_;
  for (std::size_t k = 0; k < dim_; ++k) sum[k] += static_cast<double>(vec[k]);
  ++counts_[word_id];
}

void AnchorAccumulator::merge(const AnchorAccumulator& other) {
  if (other.dim_ != dim_) {
    throw DataError("cannot merge accumulators of dim " + std::to_string(dim_) +
                    " and " + std::to_string(other.dim_));
  }
  if (other.counts_.empty()) return;
  ensure(static_cast<std::uint32_t>(other.counts_.size() - 1));
  for (std::size_t w = 0; w < other.counts_.size(); ++w) {
    if (other.counts_[w] == 0) continue;
    counts_[w] += other.counts_[w];
    for (std::size_t k = 0; k < dim_; ++k) {
      sums_[w * dim_ + k] += other.sums_[w * dim_ + k];
    }
  }
}

std::int64_t AnchorAccumulator::count(std::uint32_t word_id) const {
  return word_id < counts_.size() ? counts_[word_id] : 0;
}

std::span<const double> AnchorAccumulator::sum(std::uint32_t word_id) const {
  if (word_id >= counts_.size()) return {};
  return {sums_.data() + static_cast<std::size_t>(word_id) * dim_, dim_};
}

std::size_t AnchorAccumulator::words() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(), [](auto c) { return c > 0; }));
}

AnchorTable AnchorAccumulator::finalize(const Vocab& vocab,
                                        std::int64_t min_count) const {
  AnchorTable table(dim_);
  std::vector<double> mean(dim_);
  for (std::size_t w = 0; w < counts_.size(); ++w) {
    const auto n = counts_[w];
    if (n == 0 || n < min_count) continue;
    if (w >= vocab.size()) {
      throw DataError("word id " + std::to_string(w) + " is outside the vocabulary",
                      w);
    }
    // Division (not multiplication by 1/n) so identical tokens give back
    // exactly that vector.
    for (std::size_t k = 0; k < dim_; ++k) {
      mean[k] = sums_[w * dim_ + k] / static_cast<double>(n);
    }
    table.add(vocab.surface(static_cast<std::uint32_t>(w)),
              std::span<const double>(mean), n);
  }
  return table;
}

AnchorAccumulator merged(const AnchorAccumulator& a, const AnchorAccumulator& b) {
  AnchorAccumulator out = a;
  out.merge(b);
  return out;
}

AnchorAccumulator accumulate_sharded(std::span<const TokenRecord> records,
                                     std::size_t dim, std::size_t shards) {
  shards = std::max<std::size_t>(1, shards);
  std::vector<AnchorAccumulator> parts(shards, AnchorAccumulator(dim));
  const std::size_t n = records.size();
  const auto count = static_cast<long>(shards);
#pragma omp parallel for schedule(static)
  for (long s = 0; s < count; ++s) {
    const std::size_t begin = n * static_cast<std::size_t>(s) / shards;
    const std::size_t end = n * static_cast<std::size_t>(s + 1) / shards;
    for (std::size_t i = begin; i < end; ++i) parts[s].add(records[i]);
  }
  AnchorAccumulator total(dim);
  for (const auto& p : parts) total.merge(p);
  return total;
}

AnchorAccumulator accumulate_file(const std::filesystem::path& tokens) {
  TokenStreamReader reader(tokens);
  AnchorAccumulator acc(reader.header().dim);
  TokenRecord rec;
  while (reader.next(rec)) acc.add(rec);
  return acc;
}

}  // namespace xanchor
