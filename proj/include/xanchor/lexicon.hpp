#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xanchor/anchor_table.hpp"

namespace xanchor {

/// Lowercases ASCII and Latin-1 letters (UTF-8); other bytes pass through.
std::string to_lower(std::string_view text);

struct LexiconPair {
  std::string source;
  std::string target;

  bool operator==(const LexiconPair&) const = default;
};

/// Ordered multiset of translation pairs. A source may map to many targets.
struct BilingualLexicon {
  std::vector<LexiconPair> pairs;
  std::filesystem::path provenance;

  std::size_t size() const noexcept { return pairs.size(); }
  bool operator==(const BilingualLexicon& other) const { return pairs == other.pairs; }
};

/// One pair per line, source and target separated by whitespace; blank lines
/// skipped; surfaces lowercased. FormatError (with line) on other arities.
BilingualLexicon read_dictionary(const std::filesystem::path& path);
void write_dictionary(const BilingualLexicon& lex, const std::filesystem::path& path);

enum class Side { source, target, both };

Side parse_side(std::string_view text);
std::string to_string(Side side);

struct MultiSenseList {
  std::set<std::string> words;
  Side side = Side::source;

  bool contains(std::string_view word) const { return words.count(std::string(word)) > 0; }
};

/// One word per line (lowercased); blank lines and '#' comments skipped.
MultiSenseList read_multisense(const std::filesystem::path& path, Side side);
void write_multisense(const MultiSenseList& list, const std::filesystem::path& path);

/// surface -> lemma. Words without an entry are their own lemma.
class LemmaTable {
 public:
  LemmaTable() = default;

  /// Throws DataError if the mapping is not idempotent, i.e. some lemma is
  /// itself mapped to a different word.
  explicit LemmaTable(std::unordered_map<std::string, std::string> entries);

  const std::string& lemma(const std::string& word) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::unordered_map<std::string, std::string> entries_;
};

/// TSV `surface<TAB>lemma`, lowercased. FormatError on bad lines; the
/// idempotence violation is reported as FormatError with the offending line.
LemmaTable read_lemmas(const std::filesystem::path& path);

/// Drops pairs whose word on the list's side is in the list.
BilingualLexicon filter_form(const BilingualLexicon& lex, const MultiSenseList& list);

/// Drops pairs whose word on the list's side shares a lemma with a listed word.
BilingualLexicon filter_lemma(const BilingualLexicon& lex, const MultiSenseList& list,
                              const LemmaTable& lemmas);

struct AnchorRemoval {
  AnchorTable table;
  std::size_t removed_rows = 0;
  std::size_t skipped_words = 0;  ///< listed words with no row in the table
};

/// Deletes every row whose parent surface is listed (cluster rows included).
AnchorRemoval remove_anchor_rows(const AnchorTable& table, const MultiSenseList& list);

/// Keeps pairs whose source has a row in `src` and target a row in `tgt`;
/// cluster keys count for their parent surface.
BilingualLexicon restrict_valid_pairs(const BilingualLexicon& lex,
                                      const AnchorTable& src, const AnchorTable& tgt);

}  // namespace xanchor
