#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xanchor/anchor_table.hpp"

namespace xanchor {

// ---------------------------------------------------------------------------
// Vocabulary sidecar: `word_id<TAB>surface`, UTF-8, LF, ids dense from 0 in
// frequency-descending order.
// ---------------------------------------------------------------------------

class Vocab {
 public:
  Vocab() = default;
  /// Word id i is surfaces[i]. Throws DataError on empty, duplicate or
  /// unencodable surfaces (whitespace, '#').
  explicit Vocab(std::vector<std::string> surfaces);

  std::size_t size() const noexcept { return surfaces_.size(); }
  const std::string& surface(std::uint32_t id) const { return surfaces_.at(id); }
  std::optional<std::uint32_t> find(std::string_view surface) const;
  const std::vector<std::string>& surfaces() const noexcept { return surfaces_; }

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

Vocab read_vocab(const std::filesystem::path& path);
void write_vocab(const Vocab& vocab, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Binary token stream.
//
//   magic "TKEB" | version u32 | dim u32 | count u64          (20 bytes)
//   count x ( word_id u32 | context_id u32 | dim x f32 )
//
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kTokenMagic{'T', 'K', 'E', 'B'};
inline constexpr std::uint32_t kTokenVersion = 1;
inline constexpr std::size_t kTokenHeaderBytes = 4 + 4 + 4 + 8;

inline constexpr std::size_t token_record_bytes(std::uint32_t dim) {
  return 4 + 4 + 4 * static_cast<std::size_t>(dim);
}

struct TokenRecord {
  std::uint32_t word_id = 0;
  std::uint32_t context_id = 0;
  std::vector<float> vector;

  bool operator==(const TokenRecord&) const = default;
};

struct TokenStreamHeader {
  std::uint32_t version = kTokenVersion;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

/// Single-consumer streaming reader; holds one record in memory at a time.
class TokenStreamReader {
 public:
  explicit TokenStreamReader(const std::filesystem::path& path);

  const TokenStreamHeader& header() const noexcept { return header_; }
  std::uint64_t records_read() const noexcept { return read_; }

  /// Reads the next record into `out`. Returns false once all declared
  /// records have been consumed.
  bool next(TokenRecord& out);

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  TokenStreamHeader header_;
  std::uint64_t read_ = 0;
  std::vector<unsigned char> buffer_;
};

/// Streaming writer; the record count is patched into the header on close().
class TokenStreamWriter {
 public:
  TokenStreamWriter(const std::filesystem::path& path, std::uint32_t dim);
  ~TokenStreamWriter();
  TokenStreamWriter(const TokenStreamWriter&) = delete;
  TokenStreamWriter& operator=(const TokenStreamWriter&) = delete;

  void write(const TokenRecord& record);
  void close();
  std::uint64_t count() const noexcept { return count_; }

 private:
  std::ofstream out_;
  std::uint32_t dim_;
  std::uint64_t count_ = 0;
  std::vector<unsigned char> buffer_;
  bool closed_ = false;
};

/// Validates every record first, so a DataError leaves no partial file.
void write_token_stream(std::span<const TokenRecord> records, std::uint32_t dim,
                        const std::filesystem::path& path);

/// Convenience for small files: materializes the whole stream.
std::vector<TokenRecord> read_token_stream(const std::filesystem::path& path,
                                           TokenStreamHeader* header = nullptr);

// ---------------------------------------------------------------------------
// Text embedding tables: "<n> <d>" header, then "<key> v1 ... vd" per line.
// ---------------------------------------------------------------------------

AnchorTable read_embedding_text(const std::filesystem::path& path);
void write_embedding_text(const AnchorTable& table,
                          const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
std::string format_float(float value);

// ---------------------------------------------------------------------------
// Embedding Projector export (vectors.tsv + metadata.tsv).
// ---------------------------------------------------------------------------

struct ProjectorPoint {
  std::string label;
  std::vector<double> vector;
};

struct ProjectorExport {
  std::filesystem::path vectors_path;
  std::filesystem::path metadata_path;
  std::size_t points = 0;
  std::size_t relabeled = 0;  ///< labels whose tabs/newlines were replaced
};

ProjectorExport export_projector(std::span<const ProjectorPoint> points,
                                 const std::filesystem::path& out_dir);

/// Collects every token of the listed words from a stream, labelled by
/// surface, in file order.
std::vector<ProjectorPoint> collect_projector_points(
    const std::filesystem::path& tokens, const Vocab& vocab,
    std::span<const std::string> words);

}  // namespace xanchor
