#include "xanchor/lexicon.hpp"

#include <fstream>
#include <sstream>

#include "xanchor/error.hpp"

namespace xanchor {
namespace {

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) fields.push_back(f);
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool side_matches(const LexiconPair& p, Side side,
                  const auto& listed) {
  switch (side) {
    case Side::source:
      return listed(p.source);
    case Side::target:
      return listed(p.target);
    case Side::both:
      return listed(p.source) || listed(p.target);
  }
  return false;
}

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto c = static_cast<unsigned char>(out[i]);
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c + 32);
    } else if (c == 0xC3 && i + 1 < out.size()) {
      // U+00C0..U+00DE except U+00D7 (multiplication sign)
      auto n = static_cast<unsigned char>(out[i + 1]);
      if (n >= 0x80 && n <= 0x9E && n != 0x97) out[i + 1] = static_cast<char>(n + 0x20);
      ++i;
    }
  }
  return out;
}

BilingualLexicon read_dictionary(const std::filesystem::path& path) {
  auto in = open_text(path);
  BilingualLexicon lex;
  lex.provenance = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 2 fields, got " +
                            std::to_string(fields.size()),
                        lineno);
    }
    lex.pairs.push_back({to_lower(fields[0]), to_lower(fields[1])});
  }
  return lex;
}

void write_dictionary(const BilingualLexicon& lex, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& p : lex.pairs) out << p.source << ' ' << p.target << '\n';
}

Side parse_side(std::string_view text) {
  if (text == "source") return Side::source;
  if (text == "target") return Side::target;
  if (text == "both") return Side::both;
  throw ConfigError("side must be source, target or both, got '" + std::string(text) + "'");
}

std::string to_string(Side side) {
  switch (side) {
    case Side::source:
      return "source";
    case Side::target:
      return "target";
    case Side::both:
      return "both";
  }
  return "source";
}

MultiSenseList read_multisense(const std::filesystem::path& path, Side side) {
  auto in = open_text(path);
  MultiSenseList list;
  list.side = side;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (!line.empty() && line.front() == '#') continue;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 1) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected one word per line",
                        lineno);
    }
    list.words.insert(to_lower(fields[0]));
  }
  return list;
}

void write_multisense(const MultiSenseList& list, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& w : list.words) out << w << '\n';
}

LemmaTable::LemmaTable(std::unordered_map<std::string, std::string> entries)
    : entries_(std::move(entries)) {
  for (const auto& [word, lemma] : entries_) {
    auto it = entries_.find(lemma);
    if (it != entries_.end() && it->second != lemma) {
      throw DataError("lemma table is not idempotent: " + word + " -> " + lemma + " -> " +
                      it->second);
    }
  }
}

const std::string& LemmaTable::lemma(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? word : it->second;
}

LemmaTable read_lemmas(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::unordered_map<std::string, std::string> entries;
  std::vector<std::pair<std::string, std::size_t>> order;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected surface<TAB>lemma",
                        lineno);
    }
    auto word = to_lower(line.substr(0, tab));
    auto lemma = to_lower(line.substr(tab + 1));
    if (word.empty() || lemma.empty()) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": empty field", lineno);
    }
    auto [it, inserted] = entries.emplace(word, lemma);
    if (!inserted && it->second != lemma) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": conflicting lemma for " + word,
                        lineno);
    }
    order.emplace_back(word, lineno);
  }
  for (const auto& [word, ln] : order) {
    const auto& lemma = entries.at(word);
    auto it = entries.find(lemma);
    if (it != entries.end() && it->second != lemma) {
      throw FormatError(path.string() + ":" + std::to_string(ln) + ": lemma '" + lemma +
                            "' is itself mapped to '" + it->second + "'",
                        ln);
    }
  }
  return LemmaTable(std::move(entries));
}

BilingualLexicon filter_form(const BilingualLexicon& lex, const MultiSenseList& list) {
  BilingualLexicon out;
  out.provenance = lex.provenance;
  auto listed = [&](const std::string& w) { return list.contains(w); };
  for (const auto& p : lex.pairs) {
    if (!side_matches(p, list.side, listed)) out.pairs.push_back(p);
  }
  return out;
}

BilingualLexicon filter_lemma(const BilingualLexicon& lex, const MultiSenseList& list,
                              const LemmaTable& lemmas) {
  std::set<std::string> listed_lemmas;
  for (const auto& w : list.words) listed_lemmas.insert(lemmas.lemma(w));
  BilingualLexicon out;
  out.provenance = lex.provenance;
  auto listed = [&](const std::string& w) { return listed_lemmas.count(lemmas.lemma(w)) > 0; };
  for (const auto& p : lex.pairs) {
    if (!side_matches(p, list.side, listed)) out.pairs.push_back(p);
  }
  return out;
}

AnchorRemoval remove_anchor_rows(const AnchorTable& table, const MultiSenseList& list) {
  AnchorRemoval result;
  for (const auto& w : list.words) {
    if (!table.has_surface(w)) ++result.skipped_words;
  }
  result.table = table.filtered([&](std::size_t row) {
    return !list.contains(parent_surface(table.key(row)));
  });
  result.removed_rows = table.size() - result.table.size();
  return result;
}

BilingualLexicon restrict_valid_pairs(const BilingualLexicon& lex, const AnchorTable& src,
                                      const AnchorTable& tgt) {
  BilingualLexicon out;
  out.provenance = lex.provenance;
  for (const auto& p : lex.pairs) {
    if (src.has_surface(p.source) && tgt.has_surface(p.target)) out.pairs.push_back(p);
  }
  return out;
}

}  // namespace xanchor
