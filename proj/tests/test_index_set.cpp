#include <random>
#include <sstream>

#include <doctest.h>

#include "fhclab/ctype_lab.hpp"
#include "fhclab/index_set.hpp"
#include "fhclab/visit.hpp"
#include "oracles.hpp"

using namespace fhclab;

namespace {

IndexSet random_set(std::mt19937_64& g, Index horizon, double p) {
  std::bernoulli_distribution coin(p);
  return IndexSet::from_predicate(horizon, [&](Index) { return coin(g); });
}

std::vector<Index> as_vector(const IndexSet& s) { return {s.members().begin(), s.members().end()}; }

}  // namespace

TEST_CASE("IndexSet rejects unsorted, duplicate and out-of-range members") {
  CHECK_THROWS_AS(IndexSet(10, {3, 2}), ParameterError);
  CHECK_THROWS_AS(IndexSet(10, {2, 2}), ParameterError);
  CHECK_THROWS_AS(IndexSet(10, {11}), ParameterError);
  CHECK_THROWS_AS(IndexSet(-1), ParameterError);
  auto s = IndexSet::from_unsorted(10, {7, 3, 3, 12, -1, 0});
  CHECK(as_vector(s) == std::vector<Index>{0, 3, 7});
  CHECK_THROWS_AS(IndexSet(5).min(), DomainError);
}

TEST_CASE("density profile of the evens sits at one half") {
  auto evens = IndexSet::progression(10000, 0, 2);
  auto p = density_profile(evens, 100);
  CHECK(std::abs(p.tail_min - 0.5) <= 1e-2);
  CHECK(std::abs(p.tail_max - 0.5) <= 1e-2);
}

TEST_CASE("density profile of the empty set is zero everywhere") {
  auto p = density_profile(IndexSet(50), 0);
  for (Index n = 0; n <= 50; ++n) CHECK(p.ratio(n) == 0.0);
  CHECK(p.tail_max == 0.0);
}

TEST_CASE("direct count r(19) of {2,6,10,14,18}") {
  IndexSet a(19, {2, 6, 10, 14, 18});
  auto p = density_profile(a, 0);
  CHECK(p.counts[19] == 5);
  CHECK(p.ratio(19) == 0.25);
}

TEST_CASE("burn_in beyond the horizon is a parameter error") {
  CHECK_THROWS_AS(density_profile(IndexSet(10), 11), ParameterError);
  CHECK_THROWS_AS(tail_min(IndexSet(10), 11), ParameterError);
}

TEST_CASE("counting ratios agree with a recount and stay in [0, 1]") {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index h = 200 + static_cast<Index>(g() % 300);
    auto s = random_set(g, h, 0.05 + 0.9 * static_cast<double>(g() % 100) / 100.0);
    const Index burn = static_cast<Index>(g() % static_cast<std::uint64_t>(h));
    auto p = density_profile(s, burn);
    auto m = as_vector(s);
    for (Index n = 0; n <= h; ++n) {
      CHECK(p.counts[static_cast<std::size_t>(n)] == oracle::recount(m, n));
      CHECK(p.ratio(n) >= 0.0);
      CHECK(p.ratio(n) <= 1.0);
      CHECK(s.count_upto(n) == p.counts[static_cast<std::size_t>(n)]);
    }
    auto t = oracle::tail(m, h, burn);
    CHECK(p.tail_min == t.min);
    CHECK(p.tail_max == t.max);
    CHECK(tail_min(s, burn) == t.min);
    CHECK(tail_max(s, burn) == t.max);
    CHECK(p.tail_min <= p.tail_max);
  }
}

TEST_CASE("counting is subadditive under union") {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_set(g, 500, 0.3);
    auto b = random_set(g, 500, 0.2);
    auto pu = density_profile(set_union(a, b), 0);
    auto pa = density_profile(a, 0);
    auto pb = density_profile(b, 0);
    for (Index n = 0; n <= 500; ++n) CHECK(pu.ratio(n) <= pa.ratio(n) + pb.ratio(n) + 1e-15);
  }
}

TEST_CASE("translation moves tail_min by at most t / burn_in") {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_set(g, 5000, 0.4);
    const Index t = 1 + static_cast<Index>(g() % 40);
    const Index burn = 500;
    const double diff = std::abs(tail_min(translate(a, t), burn) - tail_min(a, burn));
    CHECK(diff <= static_cast<double>(t) / burn);
  }
}

TEST_CASE("syndetic gaps") {
  SUBCASE("multiples of 5") {
    CHECK(syndetic_gap(IndexSet::progression(100, 0, 5)).max_gap == 5);
  }
  SUBCASE("singleton at 0 reports the trailing gap") {
    auto r = syndetic_gap(IndexSet(10, {0}));
    CHECK(r.max_gap == 0);
    CHECK(r.trailing_gap == 10);
  }
  SUBCASE("third dyadic layer 4, 12, 20, ...") {
    auto layer = IndexSet::progression(1000, 4, 8);
    auto m = as_vector(layer);
    Index gap = m.front();
    for (std::size_t i = 1; i < m.size(); ++i) gap = std::max(gap, m[i] - m[i - 1]);
    CHECK(gap == 8);
    CHECK(syndetic_gap(layer).max_gap == gap);
  }
  CHECK_THROWS_AS(syndetic_gap(IndexSet(10)), DomainError);
}

TEST_CASE("set algebra examples") {
  CHECK(as_vector(set_union(IndexSet(5, {1, 3}), IndexSet(5, {2, 3}))) == std::vector<Index>{1, 2, 3});
  CHECK(as_vector(translate(IndexSet(6, {0, 5}), 3)) == std::vector<Index>{3});
  CHECK(set_intersection(IndexSet::progression(100, 0, 2), IndexSet::progression(100, 0, 3)) ==
        IndexSet::progression(100, 0, 6));
  CHECK(as_vector(set_difference(IndexSet(9, {1, 2, 3, 4}), IndexSet(9, {2, 4}))) ==
        std::vector<Index>{1, 3});
  CHECK(as_vector(dilate(IndexSet(20, {0, 10}), 2)) ==
        std::vector<Index>{0, 1, 2, 8, 9, 10, 11, 12});
  CHECK(set_algebra(SetOp::intersect, IndexSet(10, {1, 2}), IndexSet(4, {2, 4})).horizon() == 4);
  CHECK(as_vector(translate(IndexSet(10, {1, 5}), -2)) == std::vector<Index>{3});
}

TEST_CASE("set algebra agrees with indicator arithmetic") {
  std::mt19937_64 g(14);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_set(g, 300, 0.5);
    auto b = random_set(g, 300, 0.5);
    auto ia = oracle::indicator(as_vector(a), 300), ib = oracle::indicator(as_vector(b), 300);
    auto u = set_union(a, b), i = set_intersection(a, b), d = set_difference(a, b);
    for (Index n = 0; n <= 300; ++n) {
      auto k = static_cast<std::size_t>(n);
      CHECK(u.contains(n) == (ia[k] || ib[k]));
      CHECK(i.contains(n) == (ia[k] && ib[k]));
      CHECK(d.contains(n) == (ia[k] && !ib[k]));
    }
  }
}

TEST_CASE("IndexSet file round trip and malformed input") {
  IndexSet s(40, {0, 7, 39});
  std::stringstream io;
  write_index_set(io, s);
  CHECK(io.str() == "horizon=40\n0\n7\n39\n");
  CHECK(read_index_set(io) == s);
  std::istringstream bad("horizon=4\nx\n");
  CHECK_THROWS_AS(read_index_set(bad), ParameterError);
  std::istringstream nohead("3\n");
  CHECK_THROWS_AS(read_index_set(nohead), ParameterError);
}

TEST_CASE("density CSV columns") {
  std::ostringstream out;
  write_density_csv(out, density_profile(IndexSet(3, {1, 3}), 0));
  CHECK(out.str().rfind("N,count,ratio\n0,0,0\n1,1,0.5\n", 0) == 0);
}

TEST_CASE("block vector norms") {
  Vector<Rational> c(4);
  c << 1, -2, Rational(1, 2), 0;
  CHECK(norm<Rational>(c, NormTag::sup_norm()) == 2);
  CHECK(norm<Rational>(c, NormTag::ell(1)) == Rational(7, 2));
  CHECK(norm<Rational>(c, NormTag::c0_sum_of_ell1(2)) == 3);
  CHECK_THROWS_AS(norm<Rational>(c, NormTag::ell(2)), ArithmeticModeError);
  CHECK(norm_less_than<Rational>(c, NormTag::ell(2), Rational(3)));   // 21/4 < 9
  CHECK_FALSE(norm_less_than<Rational>(c, NormTag::ell(2), Rational(2)));
  CHECK(norm<Rational>(Vector<Rational>::Zero(4), NormTag::ell(1)) == 0);
  CHECK_THROWS_AS(BlockVector<Rational>(Vector<Rational>::Zero(5), NormTag::c0_sum_of_ell1(2)),
                  ParameterError);
  Vector<Real> r(2);
  r << 3, 4;
  CHECK(norm<Real>(r, NormTag::ell(2)) == doctest::Approx(5.0));
}

TEST_CASE("visit sets") {
  SUBCASE("identity visits every time") {
    auto I = LinearOperator<Rational>::identity(3);
    auto x = BlockVector<Rational>::basis(3, 1, NormTag::sup_norm());
    auto v = visit_set(I, x, x, Rational(1, 10), 25);
    CHECK(v == IndexSet::interval(25, 0, 25));
  }
  SUBCASE("2B on two coordinates is nilpotent") {
    auto T = LinearOperator<Rational>::from_triplets(2, 2, {{0, 1, Rational(2)}});
    auto x = BlockVector<Rational>::basis(2, 1, NormTag::sup_norm());
    BlockVector<Rational> center(Vector<Rational>::Zero(2), NormTag::sup_norm());
    center.coords(0) = 2;
    CHECK(as_vector(visit_set(T, x, center, Rational(1, 10), 20)) == std::vector<Index>{1});
  }
  SUBCASE("single-block C-type operator flips e0") {
    CTypeParams p;
    p.n_max = 1;
    p.b = {0, 1};
    p.phi = {0};
    p.v = {Rational(0)};
    p.weights = {Rational(0)};
    auto T = build_ctype(p);
    auto x = BlockVector<Rational>::basis(1, 0, NormTag::sup_norm());
    CHECK(visit_set(T, x, x, Rational(1, 2), 30) == IndexSet::progression(30, 0, 2));
  }
  SUBCASE("radii give nested visit sets") {
    auto T = LinearOperator<Real>::from_triplets(3, 3, {{0, 1, 2.0L}, {1, 2, 2.0L}, {2, 0, 0.25L}});
    Vector<Real> c(3);
    c << 0.3L, -0.2L, 0.9L;
    BlockVector<Real> x(c, NormTag::ell(1));
    auto center = BlockVector<Real>::basis(3, 0, NormTag::ell(1));
    IndexSet prev(60);
    for (Real r : {0.5L, 1.0L, 2.0L, 4.0L}) {
      auto v = visit_set(T, x, center, r, 60);
      CHECK(std::includes(v.members().begin(), v.members().end(), prev.members().begin(),
                          prev.members().end()));
      prev = v;
    }
  }
  SUBCASE("dimension mismatch and bad radius") {
    auto I = LinearOperator<Rational>::identity(3);
    auto x = BlockVector<Rational>::basis(3, 0, NormTag::sup_norm());
    auto y = BlockVector<Rational>::basis(2, 0, NormTag::sup_norm());
    CHECK_THROWS_AS(visit_set(I, x, y, Rational(1), 5), ParameterError);
    CHECK_THROWS_AS(visit_set(I, x, x, Rational(0), 5), ParameterError);
  }
}

TEST_CASE("exact orbits refuse to grow without bound") {
  // each step adds about 13k bits; the budget is crossed after a few hundred steps
  auto T = LinearOperator<Rational>::from_triplets(1, 1, {{0, 0, rational_pow(Rational(3, 7), 3000)}});
  BlockVector<Rational> x(Vector<Rational>::Ones(1), NormTag::sup_norm());
  CHECK_THROWS_AS(visit_set(T, x, x, Rational(1), 100000), ArithmeticModeError);
}
