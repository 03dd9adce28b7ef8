#include <doctest.h>

#include <algorithm>

#include "support.hpp"
#include "xanchor/error.hpp"
#include "xanchor/lexicon.hpp"

using namespace xanchor;

namespace {

const std::string fixtures = XANCHOR_FIXTURES;

BilingualLexicon table1() { return read_dictionary(fixtures + "/bank.dict"); }

MultiSenseList bank_list(Side side = Side::source) {
  MultiSenseList l;
  l.words = {"bank"};
  l.side = side;
  return l;
}

LemmaTable bank_lemmas() { return LemmaTable({{"banks", "bank"}, {"banking", "bank"}}); }

bool subset(const BilingualLexicon& a, const BilingualLexicon& b) {
  auto x = a.pairs, y = b.pairs;
  auto lt = [](const LexiconPair& p, const LexiconPair& q) {
    return std::tie(p.source, p.target) < std::tie(q.source, q.target);
  };
  std::sort(x.begin(), x.end(), lt);
  std::sort(y.begin(), y.end(), lt);
  return std::includes(y.begin(), y.end(), x.begin(), x.end(), lt);
}

AnchorTable table_of(std::initializer_list<std::string> keys) {
  AnchorTable t(1);
  const double v[1] = {1};
  for (const auto& k : keys) t.add(k, v);
  return t;
}

}  // namespace

TEST_SUITE("lexicon") {

TEST_CASE("bank dictionary form removal") {
  auto lex = table1();
  REQUIRE(lex.size() == 6);
  auto out = filter_form(lex, bank_list());
  CHECK(out.size() == 4);
  CHECK(lex.size() - out.size() == 2);
  for (const auto& p : out.pairs) CHECK(p.source != "bank");
}

TEST_CASE("bank dictionary lemma removal") {
  auto out = filter_lemma(table1(), bank_list(), bank_lemmas());
  CHECK(out.size() == 0);
  auto fixture_lemmas = read_lemmas(fixtures + "/lemmas_en.tsv");
  CHECK(filter_lemma(table1(), bank_list(), fixture_lemmas).size() == 0);
}

TEST_CASE("empty list is a no-op") {
  auto lex = table1();
  MultiSenseList none;
  CHECK(filter_form(lex, none) == lex);
  CHECK(filter_lemma(lex, none, bank_lemmas()) == lex);
}

TEST_CASE("empty lemma table collapses to form removal") {
  auto lex = table1();
  CHECK(filter_lemma(lex, bank_list(), LemmaTable{}) == filter_form(lex, bank_list()));
}

TEST_CASE("target and both sides") {
  auto lex = table1();
  MultiSenseList fr;
  fr.words = {"banque"};
  fr.side = Side::target;
  CHECK(filter_form(lex, fr).size() == 4);
  MultiSenseList both;
  both.words = {"bank", "banque"};
  both.side = Side::both;
  CHECK(filter_form(lex, both).size() == 3);
  CHECK(parse_side("both") == Side::both);
  CHECK(to_string(Side::target) == "target");
  CHECK_THROWS_AS(parse_side("left"), ConfigError);
}

TEST_CASE("planted 9,496-pair dictionary") {
  auto p = testing::planted_dictionary(1);
  REQUIRE(p.lex.size() == 9496);
  auto form = filter_form(p.lex, p.list);
  CHECK(p.lex.size() - form.size() == p.form_removed);
  CHECK(form.size() == 9161);
  auto lemma = filter_lemma(p.lex, p.list, LemmaTable(p.lemmas));
  CHECK(p.lex.size() - lemma.size() == p.lemma_removed);
  CHECK(lemma.size() == 9076);
}

TEST_CASE("filter properties on random lexicons") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    BilingualLexicon lex;
    for (int i = 0; i < 80; ++i) {
      lex.pairs.push_back({"s" + std::to_string(rng() % 30), "t" + std::to_string(rng() % 30)});
    }
    std::unordered_map<std::string, std::string> lm;
    for (int i = 10; i < 30; ++i) {
      if (rng() % 2) lm["s" + std::to_string(i)] = "s" + std::to_string(rng() % 10);
    }
    LemmaTable lemmas(lm);
    MultiSenseList list;
    for (int i = 0; i < 10; ++i) {
      if (rng() % 3 == 0) list.words.insert("s" + std::to_string(i));
    }
    auto form = filter_form(lex, list);
    auto lemma = filter_lemma(lex, list, lemmas);
    CHECK(subset(form, lex));
    CHECK(subset(lemma, form));
    CHECK(filter_form(form, list) == form);
    CHECK(filter_lemma(lemma, list, lemmas) == lemma);
    CHECK(filter_form(lemma, list) == filter_lemma(form, list, lemmas));

    AnchorTable src(1), tgt(1);
    const double v[1] = {1};
    for (int i = 0; i < 30; ++i) {
      if (rng() % 4) src.add("s" + std::to_string(i), v);
      if (rng() % 4) tgt.add("t" + std::to_string(i), v);
    }
    CHECK(restrict_valid_pairs(form, src, tgt) == filter_form(restrict_valid_pairs(lex, src, tgt), list));
    CHECK(restrict_valid_pairs(lemma, src, tgt) == filter_lemma(restrict_valid_pairs(lex, src, tgt), list, lemmas));
    CHECK(form.size() + (lex.size() - form.size()) == lex.size());
  }
}

TEST_CASE("dictionary parsing") {
  testing::TempDir tmp("lex");
  testing::spit(tmp / "d.txt", "Bank\tBanque\n\n  cat   chat \nMadagascar madagascar\n");
  auto lex = read_dictionary(tmp / "d.txt");
  REQUIRE(lex.size() == 3);
  CHECK(lex.pairs[0] == LexiconPair{"bank", "banque"});
  CHECK(lex.pairs[1] == LexiconPair{"cat", "chat"});
  CHECK(lex.pairs[2] == LexiconPair{"madagascar", "madagascar"});
  write_dictionary(lex, tmp / "e.txt");
  CHECK(read_dictionary(tmp / "e.txt") == lex);

  testing::spit(tmp / "bad.txt", "a b\nc d e\n");
  try {
    read_dictionary(tmp / "bad.txt");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("lowercasing") {
  CHECK(to_lower("ÉLAN Bank") == "élan bank");
  CHECK(to_lower("ÀÖØÞ") == "àöøþ");
  CHECK(to_lower("日本") == "日本");
}

TEST_CASE("multi-sense list file") {
  auto l = read_multisense(fixtures + "/multisense_en.txt", Side::source);
  CHECK(l.words == std::set<std::string>{"bank", "lie"});
  testing::TempDir tmp("lex");
  write_multisense(l, tmp / "m.txt");
  CHECK(read_multisense(tmp / "m.txt", Side::source).words == l.words);
}

TEST_CASE("lemma tables must be idempotent") {
  CHECK_THROWS_AS(LemmaTable({{"banking", "banks"}, {"banks", "bank"}}), DataError);
  testing::TempDir tmp("lex");
  testing::spit(tmp / "l.tsv", "banks\tbank\nbank\tbanc\n");
  try {
    read_lemmas(tmp / "l.tsv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    // the entry whose lemma is itself mapped
    CHECK(e.line() == 1);
  }
  auto t = read_lemmas(fixtures + "/lemmas_en.tsv");
  CHECK(t.lemma("lay") == "lie");
  CHECK(t.lemma("lie") == "lie");
  CHECK(t.lemma("tree") == "tree");
}

TEST_CASE("anchor row removal") {
  auto t = table_of({"bank", "tree"});
  auto r = remove_anchor_rows(t, bank_list());
  CHECK(r.table.keys() == std::vector<std::string>{"tree"});
  CHECK(r.removed_rows == 1);
  CHECK(r.skipped_words == 0);

  MultiSenseList other;
  other.words = {"river", "lake"};
  auto same = remove_anchor_rows(t, other);
  CHECK(same.table == t);
  CHECK(same.skipped_words == 2);

  auto clustered = table_of({"bank#0", "bank#1", "tree"});
  CHECK(remove_anchor_rows(clustered, bank_list()).table.keys() == std::vector<std::string>{"tree"});
}

TEST_CASE("50,000-row table with 280 listed hits") {
  AnchorTable t(1);
  const double v[1] = {0.5};
  for (int i = 0; i < 50000; ++i) t.add("w" + std::to_string(i), v);
  MultiSenseList l;
  for (int i = 0; i < 280; ++i) l.words.insert("w" + std::to_string(i * 170));
  for (int i = 0; i < 20; ++i) l.words.insert("absent" + std::to_string(i));
  REQUIRE(l.words.size() == 300);
  auto r = remove_anchor_rows(t, l);
  CHECK(r.table.size() == 49720);
  CHECK(r.removed_rows == 280);
  CHECK(r.skipped_words == 20);
}

TEST_CASE("valid pairs") {
  auto src = table_of({"cat", "dog", "bank#0", "bank#1"});
  auto tgt = table_of({"chat", "chien", "banque"});
  BilingualLexicon lex;
  lex.pairs = {{"cat", "chat"}, {"dog", "loup"}, {"bank", "banque"}, {"tree", "arbre"}};
  auto out = restrict_valid_pairs(lex, src, tgt);
  CHECK(out.pairs == std::vector<LexiconPair>{{"cat", "chat"}, {"bank", "banque"}});

  BilingualLexicon ten;
  for (int i = 0; i < 10; ++i) ten.pairs.push_back({"cat", i < 7 ? std::string("chat") : "oov" + std::to_string(i)});
  CHECK(restrict_valid_pairs(ten, src, tgt).size() == 7);
}

}  // TEST_SUITE
