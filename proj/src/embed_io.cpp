#include "xanchor/embed_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

#include "xanchor/error.hpp"
#include "xanchor/log.hpp"

namespace xanchor {
namespace {

bool has_whitespace(std::string_view s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
        c == '\f') {
      return true;
    }
  }
  return false;
}

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc
                                 : std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

// --- Vocab -----------------------------------------------------------------

Vocab::Vocab(std::vector<std::string> surfaces) : surfaces_(std::move(surfaces)) {
  ids_.reserve(surfaces_.size());
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const auto& s = surfaces_[i];
    if (s.empty()) throw DataError("empty surface at word id " + std::to_string(i), i);
    if (has_whitespace(s)) {
      throw DataError("surface '" + s + "' contains whitespace", i);
    }
    if (s.find(kClusterSeparator) != std::string::npos) {
      throw DataError("surface '" + s + "' contains reserved '#'", i);
    }
    if (!ids_.emplace(s, static_cast<std::uint32_t>(i)).second) {
      throw DataError("duplicate surface '" + s + "'", i);
    }
  }
}

std::optional<std::uint32_t> Vocab::find(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Vocab read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary '" + path.string() + "'");
  std::vector<std::string> surfaces;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim_cr(raw);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'word_id<TAB>surface'",
                        line_no);
    }
    std::uint32_t id = 0;
    if (!parse_number(line.substr(0, tab), id)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                            ": bad word id",
                        line_no);
    }
    if (id != surfaces.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                            ": word ids must be dense and ordered, expected " +
                            std::to_string(surfaces.size()),
                        line_no);
    }
    surfaces.emplace_back(line.substr(tab + 1));
  }
  return Vocab(std::move(surfaces));
}

void write_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  auto out = open_out(path, true);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << i << '\t' << vocab.surfaces()[i] << '\n';
  }
}

// --- Token stream ----------------------------------------------------------

TokenStreamReader::TokenStreamReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw Error("cannot open token stream '" + path.string() + "'");
  std::array<unsigned char, kTokenHeaderBytes> raw{};
  in_.read(reinterpret_cast<char*>(raw.data()), raw.size());
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got < 4 || std::memcmp(raw.data(), kTokenMagic.data(), 4) != 0) {
    throw FormatError("'" + path.string() + "' is not a token stream (bad magic)");
  }
  if (got < kTokenHeaderBytes) {
    throw TruncationError("'" + path.string() + "': truncated header", got, 0);
  }
  header_.version = get_u32(raw.data() + 4);
  header_.dim = get_u32(raw.data() + 8);
  header_.count = get_u64(raw.data() + 12);
  if (header_.version != kTokenVersion) {
    throw FormatError("'" + path.string() + "': unsupported version " +
                      std::to_string(header_.version));
  }
  if (header_.dim == 0) {
    throw FormatError("'" + path.string() + "': dimension must be positive");
  }
  buffer_.resize(token_record_bytes(header_.dim));
}

bool TokenStreamReader::next(TokenRecord& out) {
  if (read_ == header_.count) {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw FormatError("'" + path_.string() + "': trailing bytes after " +
                        std::to_string(header_.count) + " records");
    }
    return false;
  }
  const std::uint64_t offset =
      kTokenHeaderBytes + read_ * static_cast<std::uint64_t>(buffer_.size());
  in_.read(reinterpret_cast<char*>(buffer_.data()),
           static_cast<std::streamsize>(buffer_.size()));
  if (static_cast<std::size_t>(in_.gcount()) != buffer_.size()) {
    throw TruncationError("'" + path_.string() + "': record " +
                              std::to_string(read_ + 1) + " of " +
                              std::to_string(header_.count) +
                              " truncated at byte offset " +
                              std::to_string(offset + in_.gcount()),
                          offset, read_);
  }
  out.word_id = get_u32(buffer_.data());
  out.context_id = get_u32(buffer_.data() + 4);
  out.vector.resize(header_.dim);
  for (std::uint32_t k = 0; k < header_.dim; ++k) {
    const float v = std::bit_cast<float>(get_u32(buffer_.data() + 8 + 4 * k));
    if (!std::isfinite(v)) {
      throw DataError("'" + path_.string() + "': non-finite component in record " +
                          std::to_string(read_),
                      read_);
    }
    out.vector[k] = v;
  }
  ++read_;
  return true;
}

TokenStreamWriter::TokenStreamWriter(const std::filesystem::path& path,
                                     std::uint32_t dim)
    : out_(open_out(path, true)), dim_(dim), buffer_(token_record_bytes(dim)) {
  if (dim == 0) throw DataError("token stream dimension must be positive");
  std::array<unsigned char, kTokenHeaderBytes> raw{};
  std::memcpy(raw.data(), kTokenMagic.data(), 4);
  put_u32(raw.data() + 4, kTokenVersion);
  put_u32(raw.data() + 8, dim);
  put_u64(raw.data() + 12, 0);
  out_.write(reinterpret_cast<const char*>(raw.data()), raw.size());
}

TokenStreamWriter::~TokenStreamWriter() {
  try {
    close();
  } catch (...) {
  }
}

void TokenStreamWriter::write(const TokenRecord& record) {
  if (record.vector.size() != dim_) {
    throw DataError("record " + std::to_string(count_) + " has length " +
                        std::to_string(record.vector.size()) + ", expected " +
                        std::to_string(dim_),
                    count_);
  }
  put_u32(buffer_.data(), record.word_id);
  put_u32(buffer_.data() + 4, record.context_id);
  for (std::uint32_t k = 0; k < dim_; ++k) {
    if (!std::isfinite(record.vector[k])) {
      throw DataError("record " + std::to_string(count_) +
                          " has a non-finite component",
                      count_);
    }
    put_u32(buffer_.data() + 8 + 4 * k, std::bit_cast<std::uint32_t>(record.vector[k]));
  }
  out_.write(reinterpret_cast<const char*>(buffer_.data()),
             static_cast<std::streamsize>(buffer_.size()));
  ++count_;
}

void TokenStreamWriter::close() {
  if (closed_) return;
  closed_ = true;
  std::array<unsigned char, 8> raw{};
  put_u64(raw.data(), count_);
  out_.seekp(12);
  out_.write(reinterpret_cast<const char*>(raw.data()), raw.size());
  out_.close();
  if (!out_) throw Error("failed to finalize token stream");
}

void write_token_stream(std::span<const TokenRecord> records, std::uint32_t dim,
                        const std::filesystem::path& path) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].vector.size() != dim) {
      throw DataError("record " + std::to_string(i) + " has length " +
                          std::to_string(records[i].vector.size()) +
                          ", expected " + std::to_string(dim),
                      i);
    }
    for (float v : records[i].vector) {
      if (!std::isfinite(v)) {
        throw DataError("record " + std::to_string(i) + " has a non-finite component", i);
      }
    }
  }
  TokenStreamWriter writer(path, dim);
  for (const auto& r : records) writer.write(r);
  writer.close();
}

std::vector<TokenRecord> read_token_stream(const std::filesystem::path& path,
                                           TokenStreamHeader* header) {
  TokenStreamReader reader(path);
  if (header) *header = reader.header();
  std::vector<TokenRecord> records;
  TokenRecord rec;
  while (reader.next(rec)) records.push_back(rec);
  return records;
}

// --- Text embeddings -------------------------------------------------------

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string format_float(float value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

AnchorTable read_embedding_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings '" + path.string() + "'");
  std::string raw;
  std::size_t line_no = 1;
  if (!std::getline(in, raw)) {
    throw FormatError(path.string() + ":1: missing '<n> <d>' header", 1);
  }
  const auto header = split_ws(trim_cr(raw));
  std::size_t n = 0;
  std::size_t d = 0;
  if (header.size() != 2 || !parse_number(header[0], n) ||
      !parse_number(header[1], d) || d == 0) {
    throw FormatError(path.string() + ":1: expected '<n> <d>' header", 1);
  }
  AnchorTable table(d);
  std::vector<double> vec(d);
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim_cr(raw);
    if (line.empty()) continue;
    const auto fields = split_ws(line);
    if (fields.size() != d + 1) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                            ": expected a word and " + std::to_string(d) +
                            " floats, got " +
                            std::to_string(fields.empty() ? 0 : fields.size() - 1),
                        line_no);
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (!parse_number(fields[k + 1], vec[k])) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": bad float '" + std::string(fields[k + 1]) + "'",
                          line_no);
      }
    }
    if (table.size() == n) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                            ": more rows than the declared " + std::to_string(n),
                        line_no);
    }
    table.add(std::string(fields[0]), std::span<const double>(vec), 1);
  }
  if (table.size() != n) {
    throw FormatError(path.string() + ": header declares " + std::to_string(n) +
                          " rows, found " + std::to_string(table.size()),
                      line_no);
  }
  return table;
}

void write_embedding_text(const AnchorTable& table,
                          const std::filesystem::path& path) {
  if (table.dim() < 1) throw DataError("cannot write a table of dimension 0");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.key(i).empty() || has_whitespace(table.key(i))) {
      throw DataError("key '" + table.key(i) +
                          "' cannot be encoded in the text format",
                      i);
    }
  }
  auto out = open_out(path, true);
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.key(i);
    for (double v : table.vector(i)) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

// --- Projector -------------------------------------------------------------

ProjectorExport export_projector(std::span<const ProjectorPoint> points,
                                 const std::filesystem::path& out_dir) {
  if (!points.empty()) {
    const auto d = points.front().vector.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].vector.size() != d) {
        throw DataError("projector point " + std::to_string(i) + " has dimension " +
                            std::to_string(points[i].vector.size()) + ", expected " +
                            std::to_string(d),
                        i);
      }
    }
  }
  std::filesystem::create_directories(out_dir);
  ProjectorExport result;
  result.vectors_path = out_dir / "vectors.tsv";
  result.metadata_path = out_dir / "metadata.tsv";
  auto vectors = open_out(result.vectors_path, true);
  auto metadata = open_out(result.metadata_path, true);
  metadata << "label\n";
  for (const auto& p : points) {
    for (std::size_t k = 0; k < p.vector.size(); ++k) {
      if (k) vectors << '\t';
      vectors << format_double(p.vector[k]);
    }
    vectors << '\n';
    std::string label = p.label;
    bool changed = false;
    for (char& c : label) {
      if (c == '\t' || c == '\n' || c == '\r') {
        c = ' ';
        changed = true;
      }
    }
    if (changed) ++result.relabeled;
    metadata << label << '\n';
  }
  result.points = points.size();
  if (result.relabeled > 0) {
    warn(std::to_string(result.relabeled) +
         " projector label(s) contained tabs or newlines; replaced with spaces");
  }
  return result;
}

std::vector<ProjectorPoint> collect_projector_points(
    const std::filesystem::path& tokens, const Vocab& vocab,
    std::span<const std::string> words) {
  std::unordered_set<std::uint32_t> wanted;
  for (const auto& w : words) {
    auto id = vocab.find(w);
    if (!id) {
      warn("word '" + w + "' is not in the vocabulary");
      continue;
    }
    wanted.insert(*id);
  }
  std::vector<ProjectorPoint> points;
  TokenStreamReader reader(tokens);
  TokenRecord rec;
  while (reader.next(rec)) {
    if (!wanted.contains(rec.word_id)) continue;
    points.push_back({vocab.surface(rec.word_id),
                      std::vector<double>(rec.vector.begin(), rec.vector.end())});
  }
  return points;
}

}  // namespace xanchor
