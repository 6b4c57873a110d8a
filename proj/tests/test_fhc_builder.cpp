#include <algorithm>
#include <random>

#include <doctest.h>

#include "fhclab/fhc_builder.hpp"
#include "oracles.hpp"

using namespace fhclab;

namespace {

BlockVector<Rational> target(std::initializer_list<int> coords) {
  Vector<Rational> c(static_cast<Index>(coords.size()));
  Index i = 0;
  for (int v : coords) c(i++) = v;
  return BlockVector<Rational>(c, NormTag::ell(1));
}

std::vector<IndexSet> residues(Index horizon, std::size_t count, Index modulus) {
  std::vector<IndexSet> A;
  for (std::size_t p = 1; p <= count; ++p)
    A.push_back(IndexSet::progression(horizon, static_cast<Index>(p) % modulus, modulus));
  return A;
}

Vector<Rational> unit(Index dim, Index k) {
  Vector<Rational> e = Vector<Rational>::Zero(dim);
  e(k) = 1;
  return e;
}

}  // namespace

TEST_CASE("epsilon rule and thresholds by hand") {
  auto eps = detail::fhcc_epsilons({Rational(1, 8), Rational(1, 8), Rational(1)});
  CHECK(eps[0] == Rational(1, 32));  // min(1/8, 1/2) / 4
  CHECK(eps[1] == Rational(1, 48));  // min(1/8, 1/4) / 6
  CHECK(eps[2] == Rational(1, 64));  // min(1, 1/8) / 8
  // c = 2: 2^-N * 2 * ||x|| <= eps
  auto N = detail::fhcc_thresholds({Rational(1), Rational(2)}, {0, 1}, {eps[0], eps[1]}, Rational(2));
  CHECK(N == std::vector<Index>{6, 8});
  // the threshold always exceeds the largest degree so far
  auto M = detail::fhcc_thresholds({Rational(1, 1000)}, {7}, {Rational(1)}, Rational(2));
  CHECK(M == std::vector<Index>{8});
  CHECK(detail::geometric_tail(Rational(2), 5) == doctest::Approx(1.0 / 16));
  CHECK(detail::geometric_tail(Rational(4), 1) == doctest::Approx(1.0 / 3));
  CHECK(detail::vector_degree(target({0, 3, 0}).coords) == 1);
  CHECK(detail::vector_degree(target({0, 0}).coords) == -1);
}

TEST_CASE("single target e0 with A_1 = N, exact orbit") {
  const Index K = 600, H = 300;
  auto w = WeightSystem::constant(Rational(2), K);
  auto plan = fhcc_vector<Rational>(w, {target({1})}, {IndexSet::interval(K - 1, 0, K - 1)},
                                    {Rational(1, 8)}, K, H, 100);
  CHECK(plan.N[0] == 6);
  auto b = plan.B(1);
  REQUIRE(!b.empty());
  CHECK(b.min() >= plan.N[0]);
  auto m = std::vector<Index>(b.members().begin(), b.members().end());
  for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i] - m[i - 1] >= 2 * plan.N[0]);
  // every n in B_1 inside the window lands within alpha of e0
  auto T = backward_shift_operator<Rational>(w, K);
  Vector<Rational> y = plan.x.coords;
  const Vector<Rational> e0 = unit(K, 0);
  for (Index n = 0; n <= H; ++n) {
    if (b.contains(n)) CHECK(norm<Rational>(Vector<Rational>(y - e0), NormTag::ell(1)) < Rational(1, 8));
    y = T.apply(y);
  }
  auto check = check_fhcc_orbit(plan, T);
  CHECK(check.pass());
  CHECK(check.checked[0] > 0);
}

TEST_CASE("two targets on residue classes, float orbit") {
  // thinning the second class needs a long window; the orbit itself is only followed to H
  const Index K = 20000, H = 3000;
  auto w = WeightSystem::constant(Rational(2), K);
  auto A = residues(K - 1, 2, 4);
  auto plan = fhcc_vector<Real>(w, {target({1}), target({1, 1})}, A, {Rational(1, 8), Rational(1, 8)},
                                K, H, 7500);
  CHECK(plan.invariant_ok);
  for (const auto& s : plan.split) CHECK(s.holds());
  CHECK(plan.N == std::vector<Index>{6, 8});
  for (std::size_t p = 1; p <= 2; ++p) {
    const auto& Bp = plan.B(p);
    CHECK(std::includes(A[p - 1].members().begin(), A[p - 1].members().end(), Bp.members().begin(),
                        Bp.members().end()));
    CHECK(Bp.min() >= plan.N[p - 1]);
  }
  CHECK(set_intersection(plan.B(1), plan.B(2)).empty());
  CHECK(plan.truncation_slack < 1e-100L);
  auto T = backward_shift_operator<Real>(w, K);
  auto check = check_fhcc_orbit(plan, T);
  CHECK(check.pass());
  for (std::size_t p = 0; p < 2; ++p) CHECK(check.max_error[p] < 3.0L / 8);
}

TEST_CASE("fhcc_vector refusals") {
  auto w = WeightSystem::constant(Rational(2), 100);
  auto A = std::vector<IndexSet>{IndexSet::interval(99, 0, 99)};
  SUBCASE("K below the orbit horizon plus the degree") {
    CHECK_THROWS_AS(fhcc_vector<Real>(w, {target({0, 1})}, A, {Rational(1, 8)}, 100, 100, 10),
                    ParameterError);
  }
  SUBCASE("target longer than K") {
    std::vector<int> big(101, 0);
    big.back() = 1;
    Vector<Rational> c(101);
    for (Index i = 0; i < 101; ++i) c(i) = big[static_cast<std::size_t>(i)];
    CHECK_THROWS_AS(fhcc_vector<Real>(w, {BlockVector<Rational>(c, NormTag::ell(1))}, A,
                                      {Rational(1, 8)}, 100, 10, 10),
                    ParameterError);
  }
  SUBCASE("weights that do not exceed 1") {
    auto one = WeightSystem::constant(Rational(1), 100);
    CHECK_THROWS_AS(fhcc_vector<Real>(one, {target({1})}, A, {Rational(1, 8)}, 100, 10, 10), DomainError);
  }
  SUBCASE("zero target and mismatched lengths") {
    CHECK_THROWS_AS(fhcc_vector<Real>(w, {target({0})}, A, {Rational(1, 8)}, 100, 10, 10), ParameterError);
    CHECK_THROWS_AS(fhcc_vector<Real>(w, {target({1})}, A, {}, 100, 10, 10), ParameterError);
  }
  SUBCASE("sets without density propagate the thinning failure") {
    auto sparse = std::vector<IndexSet>{IndexSet(99, {50})};
    CHECK_THROWS_AS(fhcc_vector<Real>(w, {target({1})}, sparse, {Rational(1, 8)}, 100, 10, 10),
                    ConstructionError);
  }
}

TEST_CASE("orbit density report") {
  SUBCASE("zero vector never visits a non-zero target") {
    auto T = LinearOperator<Rational>::identity(3);
    auto x = BlockVector<Rational>::zero(3, NormTag::ell(1));
    auto t = BlockVector<Rational>::basis(3, 0, NormTag::ell(1));
    auto r = orbit_density_report(T, x, {t}, {Rational(1, 2)}, {IndexSet::interval(50, 0, 50)}, 50, 0);
    CHECK(r[0].visits.empty());
  }
  SUBCASE("identity with target x visits A itself") {
    auto T = LinearOperator<Rational>::identity(3);
    auto x = BlockVector<Rational>::basis(3, 2, NormTag::ell(1));
    auto A = IndexSet::progression(60, 1, 3);
    auto r = orbit_density_report(T, x, {x}, {Rational(1, 2)}, {A}, 60, 0);
    CHECK(r[0].visits_in_A == A);
    CHECK(r[0].profile.tail_min == tail_min(A, 0));
  }
  SUBCASE("visit sets grow with the radius") {
    auto T = LinearOperator<Real>::from_triplets(2, 2, {{0, 1, 2.0L}, {1, 0, -0.75L}});
    Vector<Real> c(2);
    c << 0.4L, 0.3L;
    BlockVector<Real> x(c, NormTag::sup_norm());
    auto t = BlockVector<Real>::basis(2, 0, NormTag::sup_norm());
    auto all = IndexSet::interval(80, 0, 80);
    auto small = orbit_density_report(T, x, {t}, {0.3L}, {all}, 80, 0);
    auto large = orbit_density_report(T, x, {t}, {0.9L}, {all}, 80, 0);
    CHECK(std::includes(large[0].visits.members().begin(), large[0].visits.members().end(),
                        small[0].visits.members().begin(), small[0].visits.members().end()));
  }
  SUBCASE("sets shorter than the horizon are refused") {
    auto T = LinearOperator<Rational>::identity(1);
    auto x = BlockVector<Rational>::basis(1, 0, NormTag::ell(1));
    CHECK_THROWS_AS(orbit_density_report(T, x, {x}, {Rational(1)}, {IndexSet(5)}, 10, 0), ParameterError);
  }
}

TEST_CASE("similarity interpolation") {
  SUBCASE("targets already matched leave S unchanged") {
    auto S = LinearOperator<Rational>::from_triplets(3, 3, {{0, 0, Rational(2)}, {1, 1, Rational(1)}, {2, 2, Rational(3)}, {0, 2, Rational(1)}});
    std::vector<Vector<Rational>> z = {unit(3, 0), unit(3, 2)};
    std::vector<Vector<Rational>> x = {S.apply(z[0]), S.apply(z[1])};
    auto r = similarity_interpolation(S, z, x, Rational(1, 10));
    CHECK(r.op == S);
    CHECK(r.perturbation == 0);
    CHECK(r.within_eps);
  }
  SUBCASE("one rank-one step by hand") {
    auto S = LinearOperator<Rational>::identity(3);
    Vector<Rational> x = unit(3, 0);
    x(1) = Rational(1, 100);
    auto r = similarity_interpolation(S, {unit(3, 0)}, {x}, Rational(1, 10));
    DenseMatrix<Rational> want = DenseMatrix<Rational>::Identity(3, 3);
    want(1, 0) = Rational(1, 100);
    CHECK(r.op.dense() == want);
    CHECK(r.op.apply(unit(3, 0)) == x);
    CHECK(r.perturbation == Rational(1, 100));
    CHECK(r.within_eps);
  }
  SUBCASE("dependent inputs") {
    auto S = LinearOperator<Rational>::identity(3);
    CHECK_THROWS_AS(similarity_interpolation(S, {unit(3, 0), unit(3, 0)}, {unit(3, 1), unit(3, 2)}, Rational(1)),
                    RankError);
    Vector<Rational> sum = unit(3, 0) + unit(3, 1);
    CHECK_THROWS_AS(similarity_interpolation(S, {unit(3, 0), unit(3, 1), sum},
                                             {unit(3, 0), unit(3, 0), unit(3, 0)}, Rational(1)),
                    RankError);
  }
  SUBCASE("large corrections are flagged rather than refused") {
    auto S = LinearOperator<Rational>::identity(2);
    auto r = similarity_interpolation(S, {unit(2, 0)}, {Vector<Rational>(5 * unit(2, 1))}, Rational(1, 10));
    CHECK_FALSE(r.within_eps);
    CHECK(r.op.apply(unit(2, 0)) == 5 * unit(2, 1));
  }
  SUBCASE("random independent inputs") {
    std::mt19937_64 g(51);
    for (int trial = 0; trial < 15; ++trial) {
      const Index dim = 4 + static_cast<Index>(g() % 12);
      const Index L = 1 + static_cast<Index>(g() % std::min<Index>(dim, 6));
      std::vector<Triplet<Rational>> t;
      for (Index r = 0; r < dim; ++r) {
        t.emplace_back(int(r), int(r), Rational(1 + static_cast<long>(g() % 3)));
        if (r + 1 < dim) t.emplace_back(int(r), int(r + 1), Rational(static_cast<long>(g() % 5) - 2, 4));
      }
      auto S = LinearOperator<Rational>::from_triplets(dim, dim, t);
      std::vector<Vector<Rational>> z, x;
      while (static_cast<Index>(z.size()) < L) {
        Vector<Rational> c(dim);
        for (Index k = 0; k < dim; ++k) c(k) = Rational(static_cast<long>(g() % 9) - 4, 1 + static_cast<long>(g() % 3));
        DenseMatrix<Rational> Z(dim, static_cast<Index>(z.size()) + 1);
        for (std::size_t i = 0; i < z.size(); ++i) Z.col(static_cast<Index>(i)) = z[i];
        Z.col(Z.cols() - 1) = c;
        if (matrix_rank<Rational>(Z) == Z.cols()) z.push_back(c);
      }
      for (std::size_t i = 0; i < z.size(); ++i) {
        Vector<Rational> xl(dim);
        for (Index k = 0; k < dim; ++k) xl(k) = Rational(static_cast<long>(g() % 7) - 3, 8);
        x.push_back(xl);
      }
      auto r = similarity_interpolation(S, z, x, Rational(1, 10));
      for (Index l = 0; l < L; ++l) CHECK(r.op.apply(z[static_cast<std::size_t>(l)]) == x[static_cast<std::size_t>(l)]);
      CHECK(rank(r.op - S) <= L);
      REQUIRE(r.functionals.size() == static_cast<std::size_t>(L));
      for (std::size_t l = 0; l < z.size(); ++l)
        for (std::size_t s = 0; s <= l; ++s)
          CHECK(r.functionals[l].dot(z[s]) == (s == l ? Rational(1) : Rational(0)));
      Rational total = 0;
      for (const auto& s : r.steps) total += s;
      CHECK(total == r.perturbation);
    }
  }
}
