#include <doctest.h>

#include <algorithm>
#include <map>

#include "support.hpp"
#include "xanchor/anchors.hpp"
#include "xanchor/error.hpp"

using namespace xanchor;

namespace {

Vocab numbered(std::size_t n) {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back("w" + std::to_string(i));
  return Vocab(std::move(s));
}

// Oracle: per word, sort the components and add them pairwise.
double pairwise_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  while (v.size() > 1) {
    std::vector<double> next;
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) next.push_back(v[i] + v[i + 1]);
    if (v.size() % 2) next.push_back(v.back());
    v.swap(next);
  }
  return v.empty() ? 0.0 : v[0];
}

AnchorAccumulator accumulate(std::span<const TokenRecord> recs, std::size_t dim) {
  AnchorAccumulator acc(dim);
  for (const auto& r : recs) acc.add(r);
  return acc;
}

}  // namespace

TEST_SUITE("anchors") {

TEST_CASE("single token") {
  AnchorAccumulator acc(3);
  const float v[3] = {0.25f, -1.5f, 3.0f};
  acc.add(0, v);
  auto t = acc.finalize(numbered(1));
  REQUIRE(t.size() == 1);
  CHECK(t.vector(0)[0] == 0.25);
  CHECK(t.vector(0)[1] == -1.5);
  CHECK(t.vector(0)[2] == 3.0);
  CHECK(t.count(0) == 1);
}

TEST_CASE("midpoint") {
  AnchorAccumulator acc(2);
  const float a[2] = {1, 0}, b[2] = {0, 1};
  acc.add(0, a);
  acc.add(0, b);
  auto t = acc.finalize(numbered(1));
  CHECK(t.vector(0)[0] == 0.5);
  CHECK(t.vector(0)[1] == 0.5);
  CHECK(t.count(0) == 2);
}

TEST_CASE("random tokens against a pairwise-sum mean") {
  std::mt19937_64 rng(21);
  auto recs = testing::random_records(1000, 5, 7, rng);
  auto t = accumulate(recs, 5).finalize(numbered(7));
  for (std::size_t row = 0; row < t.size(); ++row) {
    const auto id = static_cast<std::uint32_t>(std::stoul(t.key(row).substr(1)));
    for (std::size_t k = 0; k < 5; ++k) {
      std::vector<double> comp;
      for (const auto& r : recs) {
        if (r.word_id == id) comp.push_back(r.vector[k]);
      }
      CHECK(t.count(row) == static_cast<std::int64_t>(comp.size()));
      const double mean = pairwise_sum(comp) / static_cast<double>(comp.size());
      CHECK(std::abs(t.vector(row)[k] - mean) <= 1e-12);
    }
  }
}

TEST_CASE("identical tokens give that vector exactly") {
  AnchorAccumulator acc(3);
  const float v[3] = {0.1f, 0.7f, -0.3f};
  for (int i = 0; i < 1001; ++i) acc.add(2, v);
  auto t = acc.finalize(numbered(3));
  REQUIRE(t.size() == 1);
  CHECK(t.key(0) == "w2");
  for (int k = 0; k < 3; ++k) CHECK(t.vector(0)[k] == static_cast<double>(v[k]));
}

TEST_CASE("min_count") {
  AnchorAccumulator acc(1);
  const float v[1] = {1};
  for (int i = 0; i < 159; ++i) acc.add(0, v);
  for (int i = 0; i < 160; ++i) acc.add(1, v);
  acc.add(2, v);
  CHECK(acc.finalize(numbered(3)).size() == 3);
  auto t = acc.finalize(numbered(3), 160);
  REQUIRE(t.size() == 1);
  CHECK(t.key(0) == "w1");
}

TEST_CASE("rows follow word id order") {
  AnchorAccumulator acc(1);
  const float v[1] = {1};
  acc.add(4, v);
  acc.add(1, v);
  acc.add(3, v);
  auto t = acc.finalize(numbered(5));
  CHECK(t.keys() == std::vector<std::string>{"w1", "w3", "w4"});
}

TEST_CASE("dimension mismatch") {
  AnchorAccumulator acc(3);
  const float v[2] = {1, 2};
  CHECK_THROWS_AS(acc.add(0, v), DataError);
  AnchorAccumulator other(2);
  CHECK_THROWS_AS(acc.merge(other), DataError);
}

TEST_CASE("word id outside the vocabulary") {
  AnchorAccumulator acc(1);
  const float v[1] = {1};
  acc.add(9, v);
  CHECK_THROWS_AS(acc.finalize(numbered(3)), DataError);
}

TEST_CASE("merge with an empty accumulator") {
  std::mt19937_64 rng(1);
  auto recs = testing::random_records(200, 3, 5, rng);
  auto a = accumulate(recs, 3);
  auto m = merged(a, AnchorAccumulator(3));
  CHECK(m.finalize(numbered(5)) == a.finalize(numbered(5)));
  auto m2 = merged(AnchorAccumulator(3), a);
  CHECK(m2.finalize(numbered(5)) == a.finalize(numbered(5)));
}

TEST_CASE("merge commutes") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto recs = testing::random_records(300, 4, 10, rng);
    const std::size_t cut = rng() % recs.size();
    auto a = accumulate(std::span(recs).first(cut), 4);
    auto b = accumulate(std::span(recs).subspan(cut), 4);
    CHECK(merged(a, b).finalize(numbered(10)) == merged(b, a).finalize(numbered(10)));
  }
}

TEST_CASE("three shards in both association orders") {
  std::mt19937_64 rng(3);
  auto recs = testing::random_records(900, 4, 12, rng);
  std::span all(recs);
  auto a = accumulate(all.subspan(0, 250), 4);
  auto b = accumulate(all.subspan(250, 400), 4);
  auto c = accumulate(all.subspan(650), 4);
  const auto v = numbered(12);
  const auto left = merged(merged(a, b), c).finalize(v);
  const auto right = merged(a, merged(b, c)).finalize(v);
  CHECK(left == right);
  CHECK(left == accumulate(recs, 4).finalize(v));
}

TEST_CASE("sharded accumulation equals sequential for any split") {
  std::mt19937_64 rng(4);
  auto recs = testing::random_records(2000, 6, 40, rng);
  const auto v = numbered(40);
  const auto seq = accumulate(recs, 6).finalize(v);
  for (std::size_t shards : {1, 2, 3, 7, 16, 64}) {
    CAPTURE(shards);
    CHECK(accumulate_sharded(recs, 6, shards).finalize(v) == seq);
  }
}

TEST_CASE("file accumulation") {
  testing::TempDir tmp("anchors");
  std::mt19937_64 rng(5);
  auto recs = testing::random_records(500, 3, 9, rng);
  write_token_stream(recs, 3, tmp / "t.tkeb");
  const auto v = numbered(9);
  CHECK(accumulate_file(tmp / "t.tkeb").finalize(v) == accumulate(recs, 3).finalize(v));
}

}  // TEST_SUITE
