#include <doctest.h>

#include <numeric>

#include "support.hpp"
#include "xanchor/align_supervised.hpp"
#include "xanchor/error.hpp"
#include "xanchor/linear_map.hpp"
#include "xanchor/log.hpp"

using namespace xanchor;

namespace {

TrainingPairs pairs_of(const RowMatrix& x, const RowMatrix& y) {
  TrainingPairs p;
  p.x = x;
  p.y = y;
  for (Eigen::Index i = 0; i < x.rows(); ++i) p.keys.emplace_back("s" + std::to_string(i), "t" + std::to_string(i));
  return p;
}

double objective(const RowMatrix& w, const RowMatrix& x, const RowMatrix& y) {
  return (x * w.transpose() - y).squaredNorm();
}

}  // namespace

TEST_SUITE("align_supervised") {

TEST_CASE("build pairs") {
  AnchorTable src(2), tgt(2);
  const double a[2] = {3, 4}, b[2] = {0, 2}, c[2] = {1, 1};
  src.add("cat", a);
  src.add("dog", b);
  tgt.add("chat", c);
  tgt.add("chien", a);
  tgt.add("loup", b);
  BilingualLexicon lex;
  lex.pairs = {{"cat", "chat"}, {"dog", "chien"}, {"dog", "loup"}};
  auto p = build_pairs(lex, src, tgt, false);
  CHECK(p.x.rows() == 3);
  CHECK(p.x.cols() == 2);
  CHECK(p.y.rows() == 3);
  CHECK(p.x(0, 0) == 3.0);
  auto n = build_pairs(lex, src, tgt, true);
  CHECK(n.normalized);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(n.x.row(i).norm() - 1.0) <= 1e-12);
    CHECK(std::abs(n.y.row(i).norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("cluster anchors expand combinatorially") {
  AnchorTable src(2), tgt(2);
  const double a[2] = {1, 0}, b[2] = {0, 1}, c[2] = {1, 1};
  src.add("bank#0", a);
  src.add("bank#1", b);
  src.add("tree", c);
  tgt.add("banque", a);
  tgt.add("rive", b);
  tgt.add("arbre", c);
  BilingualLexicon lex;
  lex.pairs = {{"bank", "banque"}, {"bank", "rive"}, {"tree", "arbre"}};
  auto p = build_pairs(lex, src, tgt, false);
  REQUIRE(p.size() == 5);
  std::set<std::pair<std::string, std::string>> keys(p.keys.begin(), p.keys.end());
  std::set<std::pair<std::string, std::string>> want{{"bank#0", "banque"}, {"bank#0", "rive"}, {"bank#1", "banque"},
                                                     {"bank#1", "rive"}, {"tree", "arbre"}};
  CHECK(keys == want);
}

TEST_CASE("zero vector with normalization names the word") {
  AnchorTable src(2), tgt(2);
  const double z[2] = {0, 0}, a[2] = {1, 0};
  src.add("void", z);
  tgt.add("vide", a);
  BilingualLexicon lex;
  lex.pairs = {{"void", "vide"}};
  CHECK_NOTHROW(build_pairs(lex, src, tgt, false));
  try {
    build_pairs(lex, src, tgt, true);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("void") != std::string::npos);
  }
}

TEST_CASE("least squares identity") {
  std::mt19937_64 rng(1);
  auto x = testing::gaussian(30, 6, rng);
  auto m = fit_least_squares(pairs_of(x, x));
  CHECK((m.w - RowMatrix::Identity(6, 6)).norm() <= 1e-8);
  CHECK_FALSE(m.orthogonal);
}

TEST_CASE("least squares planted map") {
  std::mt19937_64 rng(2);
  const int d = 7;
  auto a = testing::gaussian(d, d, rng);
  auto x = testing::gaussian(3 * d, d, rng);
  RowMatrix y = x * a.transpose();
  auto m = fit_least_squares(pairs_of(x, y));
  CHECK((m.w - a).norm() <= 1e-6);
}

TEST_CASE("least squares with a single pair") {
  RowMatrix x(1, 2), y(1, 2);
  x << 3, 4;
  y << 1, -2;
  WarningCapture cap;
  FitStats stats;
  auto m = fit_least_squares(pairs_of(x, y), &stats);
  // minimum-norm solution: W = y x^T / |x|^2
  RowMatrix expect = y.transpose() * x / 25.0;
  CHECK((m.w - expect).norm() <= 1e-12);
  CHECK(stats.residual <= 1e-12);
  CHECK(stats.rank == 1);
  CHECK(cap.messages().size() == 1);
}

TEST_CASE("procrustes planted rotation") {
  std::mt19937_64 rng(3);
  const int d = 12;
  auto r = testing::rotation(d, rng);
  auto x = testing::gaussian(100, d, rng);
  RowMatrix y = x * r.transpose();
  auto m = fit_procrustes(pairs_of(x, y));
  CHECK((m.w - r).norm() <= 1e-8);
  CHECK(m.orthogonal);
}

TEST_CASE("procrustes identity") {
  std::mt19937_64 rng(4);
  auto x = testing::gaussian(20, 5, rng);
  auto m = fit_procrustes(pairs_of(x, x));
  CHECK((m.w - RowMatrix::Identity(5, 5)).norm() <= 1e-10);
}

TEST_CASE("procrustes beats random orthogonal maps") {
  std::mt19937_64 rng(5);
  auto x = testing::gaussian(5, 4, rng);
  auto y = testing::gaussian(5, 4, rng);
  auto m = fit_procrustes(pairs_of(x, y));
  const double best = objective(m.w, x, y);
  for (int i = 0; i < 1000; ++i) {
    auto q = testing::rotation(4, rng);
    CHECK(best <= objective(q, x, y) + 1e-12);
  }
  auto ls = fit_least_squares(pairs_of(x, y));
  CHECK(objective(ls.w, x, y) <= best + 1e-12);
}

TEST_CASE("procrustes properties") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 3 + trial % 6;
    auto x = testing::gaussian(4 * d, d, rng);
    auto y = testing::gaussian(4 * d, d, rng);
    auto m = fit_procrustes(pairs_of(x, y));
    CHECK(m.orthogonality_defect() <= 1e-6 * d);
    auto scaled = fit_procrustes(pairs_of(2.5 * x, 2.5 * y));
    CHECK((scaled.w - m.w).norm() <= 1e-10);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto base = pairs_of(x, y);
    TrainingPairs shuffled = base;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.x.row(static_cast<Eigen::Index>(i)) = base.x.row(perm[i]);
      shuffled.y.row(static_cast<Eigen::Index>(i)) = base.y.row(perm[i]);
      shuffled.keys[i] = base.keys[static_cast<std::size_t>(perm[i])];
    }
    CHECK(fit_procrustes(shuffled).w == m.w);
  }
}

TEST_CASE("procrustes on a degenerate cross product") {
  RowMatrix x(2, 2), y(2, 2);
  x << 1, 0, 0, 0;
  y << 0, 0, 0, 1;
  CHECK_THROWS_AS(fit_procrustes(pairs_of(x, y)), AmbiguityError);
}

TEST_CASE("nearest orthogonal") {
  std::mt19937_64 rng(7);
  auto r = testing::rotation(6, rng);
  CHECK((nearest_orthogonal(r) - r).norm() <= 1e-12);
  auto m = nearest_orthogonal(testing::gaussian(6, 6, rng));
  CHECK((m.transpose() * m - RowMatrix::Identity(6, 6)).norm() <= 1e-12);
}

TEST_CASE("map file round trip") {
  testing::TempDir tmp("map");
  std::mt19937_64 rng(8);
  LinearMap m;
  m.w = testing::rotation(5, rng);
  m.orthogonal = true;
  m.normalized = true;
  write_map(m, tmp / "W.map");
  auto back = read_map(tmp / "W.map");
  CHECK(back == m);
  CHECK(back.w == m.w);
  const auto text = testing::slurp(tmp / "W.map");
  CHECK(text.rfind("5\n", 0) == 0);
  CHECK(text.find("orthogonal: true\n") != std::string::npos);

  testing::spit(tmp / "old.map", "2\n1 0\n0 1\northogonal: false\n");
  auto old = read_map(tmp / "old.map");
  CHECK(old.w == RowMatrix::Identity(2, 2));
  CHECK_FALSE(old.orthogonal);
  CHECK_FALSE(old.normalized);

  testing::spit(tmp / "bad.map", "2\n1 0\n0\northogonal: false\n");
  try {
    read_map(tmp / "bad.map");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("applying a map") {
  LinearMap m;
  m.w.resize(2, 2);
  m.w << 0, -1, 1, 0;
  const double v[2] = {1, 2};
  auto y = m.apply(std::span<const double>(v, 2));
  CHECK(y == std::vector<double>{-2, 1});
  AnchorTable t(2);
  t.add("a", v, 3);
  auto mt = m.apply(t);
  CHECK(mt.key(0) == "a");
  CHECK(mt.count(0) == 3);
  CHECK(mt.vector(0)[0] == -2.0);
  AnchorTable wrong(3);
  CHECK_THROWS_AS(m.apply(wrong), DataError);
}

}  // TEST_SUITE
