#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "support.hpp"
#include "xanchor/error.hpp"
#include "xanchor/kernels.hpp"
#include "xanchor/sense_cluster.hpp"
#include "xanchor/synthbench.hpp"

using namespace xanchor;

namespace {

std::vector<std::size_t> labels_in_input_order(const ClusterModel& m, std::span<const TokenRecord> toks) {
  std::map<std::uint32_t, std::size_t> by_ctx(m.assignments.begin(), m.assignments.end());
  std::vector<std::size_t> out;
  for (const auto& t : toks) out.push_back(by_ctx.at(t.context_id));
  return out;
}

ClusterParams small_params() {
  ClusterParams p;
  p.min_tokens = 10;
  return p;
}

}  // namespace

TEST_SUITE("sense_cluster") {

TEST_CASE("eigengap examples") {
  const double l1[] = {0, 0.01, 0.9, 0.95};
  CHECK(choose_k_eigengap(l1, 3) == 2);
  const double l2[] = {0.5, 0.5, 0.5, 0.5};
  CHECK(choose_k_eigengap(l2, 3) == 1);
  const double l3[] = {0.2};
  CHECK(choose_k_eigengap(l3, 3) == 1);
  const double l4[] = {0, 0, 0, 0.7, 0.8};
  CHECK(choose_k_eigengap(l4, 4) == 3);
  CHECK(choose_k_eigengap(l4, 2) == 1);
}

TEST_CASE("block-diagonal three-component graph") {
  RowMatrix a = RowMatrix::Zero(9, 9);
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) a(3 * b + i, 3 * b + j) = 1.0;
    }
  }
  auto l = normalized_laplacian_spectrum(a);
  REQUIRE(l.size() == 9);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(l[i]) < 1e-12);
  CHECK(l[3] > 0.5);
  CHECK(choose_k_eigengap(l, 8) == 3);
}

TEST_CASE("laplacian spectrum of a path graph") {
  // Normalized Laplacian of a 2-node edge with self loops of weight 1:
  // A = [[1,1],[1,1]] -> eigenvalues 0 and 1.
  RowMatrix a(2, 2);
  a << 1, 1, 1, 1;
  auto l = normalized_laplacian_spectrum(a);
  CHECK(l[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l[1] == doctest::Approx(1.0));
}

TEST_CASE("two planted blobs") {
  auto mix = planted_mixture(2, 16, 200, 10.0, 1.0, 11);
  auto m = cluster_word("bank", mix.tokens, small_params(), 3);
  CHECK(m.k == 2);
  auto got = labels_in_input_order(m, mix.tokens);
  CHECK(testing::ari_pairs(got, mix.labels) >= 0.99);
  CHECK(adjusted_rand_index(got, mix.labels) == doctest::Approx(testing::ari_pairs(got, mix.labels)));
}

TEST_CASE("adjusted rand index oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::size_t> a(40), b(40);
    for (auto& x : a) x = rng() % 4;
    for (auto& x : b) x = rng() % 3;
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(testing::ari_pairs(a, b)).epsilon(1e-12));
  }
  std::vector<std::size_t> p{0, 0, 1, 1, 2}, q{5, 5, 3, 3, 9};
  CHECK(adjusted_rand_index(p, q) == doctest::Approx(1.0));
}

TEST_CASE("identical tokens collapse to one cluster") {
  std::vector<TokenRecord> toks(200);
  for (std::size_t i = 0; i < toks.size(); ++i) toks[i] = {0, static_cast<std::uint32_t>(i), {0.5f, -1.0f, 2.0f}};
  auto m = cluster_word("same", toks, ClusterParams{}, 1);
  CHECK(m.k == 1);
  REQUIRE(m.cluster_anchors.size() == 1);
  CHECK(m.cluster_anchors[0] == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("below min_tokens") {
  auto mix = planted_mixture(2, 4, 80, 8.0, 1.0, 2);
  mix.tokens.pop_back();
  REQUIRE(mix.tokens.size() == 159);
  CHECK_THROWS_AS(cluster_word("w", mix.tokens, ClusterParams{}, 1), IneligibleError);
  mix.tokens.push_back(mix.tokens.front());
  mix.tokens.back().context_id = 9999;
  CHECK_NOTHROW(cluster_word("w", mix.tokens, ClusterParams{}, 1));
}

TEST_CASE("mixed dimensions") {
  auto mix = planted_mixture(2, 4, 10, 8.0, 1.0, 2);
  mix.tokens[3].vector.pop_back();
  CHECK_THROWS_AS(cluster_word("w", mix.tokens, small_params(), 1), DataError);
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(6);
  auto small = testing::random_records(5000, 2, 1, rng);
  CHECK(sample_tokens(small, 10000, 3) == small);
  auto big = testing::random_records(20000, 2, 1, rng);
  auto s = sample_tokens(big, 10000, 3);
  std::set<std::uint32_t> ids;
  for (const auto& t : s) ids.insert(t.context_id);
  CHECK(s.size() == 10000);
  CHECK(ids.size() == 10000);
  CHECK(sample_tokens(big, 10000, 3) == s);
  auto shuffled = big;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto s2 = sample_tokens(shuffled, 10000, 3);
  std::set<std::uint32_t> ids2;
  for (const auto& t : s2) ids2.insert(t.context_id);
  CHECK(ids == ids2);
}

TEST_CASE("model invariants and count conservation") {
  auto mix = planted_mixture(3, 8, 120, 8.0, 0.5, 9);
  auto m = cluster_word("w", mix.tokens, small_params(), 4);
  REQUIRE(m.k == 3);
  CHECK_FALSE(m.sampled);
  CHECK(m.sample_size == mix.tokens.size());
  std::int64_t total = 0;
  for (auto c : m.cluster_sizes) {
    CHECK(c >= 1);
    total += c;
  }
  CHECK(total == static_cast<std::int64_t>(mix.tokens.size()));
  CHECK(std::is_sorted(m.cluster_sizes.rbegin(), m.cluster_sizes.rend()));
  // cluster anchors are the means of their members
  std::map<std::uint32_t, const TokenRecord*> by_ctx;
  for (const auto& t : mix.tokens) by_ctx[t.context_id] = &t;
  std::vector<std::vector<double>> sums(m.k, std::vector<double>(8, 0.0));
  std::vector<double> counts(m.k, 0.0), all(8, 0.0);
  for (auto [ctx, c] : m.assignments) {
    for (int d = 0; d < 8; ++d) {
      sums[c][d] += by_ctx.at(ctx)->vector[d];
      all[d] += by_ctx.at(ctx)->vector[d];
    }
    counts[c] += 1;
  }
  for (std::size_t c = 0; c < m.k; ++c) {
    for (int d = 0; d < 8; ++d) CHECK(std::abs(m.cluster_anchors[c][d] - sums[c][d] / counts[c]) <= 1e-10);
  }
  for (int d = 0; d < 8; ++d) {
    double weighted = 0.0;
    for (std::size_t c = 0; c < m.k; ++c) weighted += m.cluster_anchors[c][d] * static_cast<double>(m.cluster_sizes[c]);
    CHECK(std::abs(weighted / static_cast<double>(total) - all[d] / static_cast<double>(total)) <= 1e-8);
  }
}

TEST_CASE("sampled word") {
  auto mix = planted_mixture(2, 4, 300, 8.0, 1.0, 13);
  ClusterParams p = small_params();
  p.max_sample = 500;
  p.eigen_cap = 200;
  auto m = cluster_word("w", mix.tokens, p, 1);
  CHECK(m.sampled);
  CHECK(m.sample_size == 500);
  CHECK(m.token_count == 600);
  CHECK(m.assignments.size() == 500);
  std::int64_t total = 0;
  for (auto c : m.cluster_sizes) total += c;
  CHECK(total == 500);
  CHECK(m.k == 2);
}

TEST_CASE("invariant to token order") {
  auto mix = planted_mixture(3, 16, 100, 8.0, 1.0, 17);
  auto a = cluster_word("w", mix.tokens, small_params(), 5);
  auto shuffled = mix.tokens;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto b = cluster_word("w", shuffled, small_params(), 5);
  CHECK(a.k == b.k);
  CHECK(a.assignments == b.assignments);
  CHECK(a.cluster_anchors == b.cluster_anchors);
}

TEST_CASE("planted k in {2,3,4}") {
  for (std::size_t k : {2u, 3u, 4u}) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto mix = planted_mixture(k, 16, 200, 8.0, 1.0, 100 + seed);
      auto m = cluster_word("w", mix.tokens, ClusterParams{}, seed);
      if (m.k == k && testing::ari_pairs(labels_in_input_order(m, mix.tokens), mix.labels) >= 0.95) ++ok;
    }
    CAPTURE(k);
    CHECK(ok == 5);
  }
}

TEST_CASE("replace with cluster anchors") {
  AnchorTable t(2);
  const double a[2] = {1, 0}, b[2] = {0, 1}, c[2] = {1, 1};
  t.add("the", a, 10);
  t.add("bank", b, 6);
  t.add("tree", c, 3);
  ClusterModel m;
  m.word = "bank";
  m.k = 2;
  m.cluster_anchors = {{0, 2}, {0, -1}};
  m.cluster_sizes = {4, 2};
  std::vector<ClusterModel> models{m};
  auto r = replace_with_cluster_anchors(t, models);
  CHECK(r.keys() == std::vector<std::string>{"the", "bank#0", "bank#1", "tree"});
  CHECK(r.size() == t.size() + 1);
  CHECK_FALSE(r.contains("bank"));
  CHECK(r.count(1) == 4);
  CHECK(r.count(2) == 2);

  // stripping keys: cluster anchors plus untouched rows
  std::multimap<std::string, std::vector<double>> got, want;
  for (std::size_t i = 0; i < r.size(); ++i) {
    got.emplace(std::string(parent_surface(r.key(i))), std::vector<double>(r.vector(i).begin(), r.vector(i).end()));
  }
  want.emplace("the", std::vector<double>{1, 0});
  want.emplace("tree", std::vector<double>{1, 1});
  want.emplace("bank", std::vector<double>{0, 2});
  want.emplace("bank", std::vector<double>{0, -1});
  CHECK(got == want);

  m.k = 1;
  m.cluster_anchors = {{9, 9}};
  std::vector<ClusterModel> single{m};
  CHECK(replace_with_cluster_anchors(t, single) == t);

  m.word = "river";
  m.k = 2;
  m.cluster_anchors = {{0, 2}, {0, -1}};
  std::vector<ClusterModel> missing{m};
  CHECK_THROWS_AS(replace_with_cluster_anchors(t, missing), KeyError);
}

TEST_CASE("model json") {
  auto mix = planted_mixture(2, 4, 30, 10.0, 1.0, 3);
  auto m = cluster_word("w", mix.tokens, small_params(), 1);
  auto j = to_json(m);
  CHECK(j["word"] == "w");
  CHECK(j["k"] == m.k);
  CHECK(j["sample_size"] == 60);
  CHECK(j["assignments"].size() == 60);
  CHECK(j["cluster_sizes"].size() == m.k);
}

}  // TEST_SUITE
