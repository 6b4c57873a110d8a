#include <random>

#include <doctest.h>

#include "fhclab/set_constructions.hpp"
#include "oracles.hpp"

using namespace fhclab;

namespace {

std::vector<Index> as_vector(const IndexSet& s) { return {s.members().begin(), s.members().end()}; }

// The four output properties, rechecked through an owner array: every member looks at
// every position within N_i + max N of itself.
bool outputs_hold(const DisjointifyPlan& plan, std::string& why) {
  const std::size_t count = plan.outputs.size();
  const Index H = plan.inputs.front().horizon();
  Index maxN = 0;
  for (Index n : plan.N) maxN = std::max(maxN, n);
  std::vector<int> owner(static_cast<std::size_t>(H + 1), -1);
  for (std::size_t i = 0; i < count; ++i)
    for (Index n : plan.outputs[i].members()) {
      if (!plan.inputs[i].contains(n)) {
        why = "subset";
        return false;
      }
      if (n < plan.N[i]) {
        why = "min bound";
        return false;
      }
      if (owner[static_cast<std::size_t>(n)] >= 0) {
        why = "disjoint";
        return false;
      }
      owner[static_cast<std::size_t>(n)] = static_cast<int>(i);
    }
  for (std::size_t i = 0; i < count; ++i)
    for (Index n : plan.outputs[i].members())
      for (Index m = std::max<Index>(0, n - plan.N[i] - maxN); m <= std::min(H, n + plan.N[i] + maxN); ++m) {
        const int j = owner[static_cast<std::size_t>(m)];
        if (m == n || j < 0) continue;
        if (std::abs(n - m) < plan.N[i] + plan.N[static_cast<std::size_t>(j)]) {
          why = "separation";
          return false;
        }
      }
  return true;
}

}  // namespace

TEST_CASE("dyadic layers") {
  CHECK(as_vector(dyadic_layers(1, 10)) == std::vector<Index>{1, 3, 5, 7, 9});
  CHECK(as_vector(dyadic_layers(2, 20)) == std::vector<Index>{2, 6, 10, 14, 18});
  CHECK(std::abs(tail_min(dyadic_layers(3, 100000), 1000) - 0.125) <= 1e-3);
  CHECK(syndetic_gap(dyadic_layers(3, 1000)).max_gap == 8);
  CHECK_THROWS_AS(dyadic_layers(0, 10), ParameterError);
}

TEST_CASE("geometric interval examples") {
  const Rational a(8), e(1, 8);
  CHECK(geometric_interval(a, e, 1, 1) == IntegerInterval{7, 9});
  CHECK(geometric_interval(a, e, 1, 2) == IntegerInterval{56, 72});
  auto wide = geometric_intervals(a, e, 4, 2, 1000);
  CHECK(wide.intervals.at(1) == IntegerInterval{4, 12});
  CHECK(wide.intervals.at(2) == IntegerInterval{32, 96});
  CHECK(wide.pairwise_disjoint());
  CHECK(wide.find(50) == 2);
  CHECK(wide.find(20) == 0);
  CHECK_THROWS_AS(geometric_interval(a, Rational(1, 4), 1, 1), ParameterError);
  CHECK_THROWS_AS(geometric_interval(Rational(1), e, 1, 1), ParameterError);
  CHECK_THROWS_AS(geometric_interval(a, e, 3, 1), ParameterError);
}

TEST_CASE("geometric intervals match 128-bit integer endpoints") {
  for (auto [an, ad] : std::vector<std::pair<int, int>>{{8, 1}, {17, 2}, {5, 1}, {31, 3}})
    for (auto [en, ed] : std::vector<std::pair<int, int>>{{1, 8}, {1, 10}, {3, 13}, {1, 5}})
      for (int mult : {1, 2, 4}) {
        if (mult * en * 4 >= 4 * ed) continue;  // keep 1 - mult eps positive
        for (int u = 1; u <= 12; ++u) {
          auto ref = oracle::interval(an, ad, en, ed, mult, u);
          auto got = geometric_interval(Rational(an, ad), Rational(en, ed), mult, u);
          CHECK(static_cast<__int128>(got.lo) == ref.lo);
          CHECK(static_cast<__int128>(got.hi) == ref.hi);
        }
      }
}

TEST_CASE("interval conditions at the pinned pair and at a = 2") {
  auto good = verify_interval_conditions(Rational(8), Rational(1, 8), 20);
  CHECK(good.all());
  auto bad = verify_interval_conditions(Rational(2), Rational(1, 8), 20);
  CHECK_FALSE(bad.disjoint);
  CHECK_FALSE(bad.first_failure.empty());
  CHECK(verify_interval_conditions(Rational(8), Rational(1, 8), 1).all());
}

TEST_CASE("passing interval conditions imply the set relations they stand for") {
  // The report is a sufficient condition: whenever it passes, the integer intervals must
  // really be disjoint, contain the differences, and absorb the [-v, v] shifts.
  for (auto [an, ad] : std::vector<std::pair<int, int>>{{8, 1}, {9, 1}, {12, 1}, {20, 1}, {3, 1}})
    for (auto [en, ed] : std::vector<std::pair<int, int>>{{1, 8}, {1, 6}, {1, 9}, {1, 16}}) {
      const int u_max = 9;
      auto rep = verify_interval_conditions(Rational(an, ad), Rational(en, ed), u_max);
      if (!rep.all()) continue;
      for (int u = 1; u <= u_max; ++u) {
        auto I4u = oracle::interval(an, ad, en, ed, 4, u);
        auto I2u = oracle::interval(an, ad, en, ed, 2, u);
        auto I1u = oracle::interval(an, ad, en, ed, 1, u);
        CHECK(I1u.lo <= I1u.hi);
        CHECK(I1u.lo - u >= I2u.lo);
        CHECK(I1u.hi + u <= I2u.hi);
        for (int v = 1; v < u; ++v) {
          auto I4v = oracle::interval(an, ad, en, ed, 4, v);
          auto I2v = oracle::interval(an, ad, en, ed, 2, v);
          CHECK(I4v.hi < I4u.lo);
          CHECK(I2u.lo - I2v.hi >= I4u.lo);
          CHECK(I2u.hi - I2v.lo <= I4u.hi);
        }
      }
    }
}

TEST_CASE("thin takes every s-th element") {
  IndexSet a(30, {1, 2, 4, 8, 16, 20, 25});
  CHECK(as_vector(thin(a, 2)) == std::vector<Index>{2, 8, 20});
  CHECK(as_vector(thin(a, 3)) == std::vector<Index>{4, 20});
  CHECK(thin(a, 1) == a);
  CHECK_THROWS_AS(thin(a, 0), ParameterError);
}

TEST_CASE("disjointify on Z>=1 and the evens") {
  const Index H = 100000;
  auto A1 = IndexSet::interval(H, 1, H);
  auto A2 = IndexSet::progression(H, 2, 2);
  auto plan = disjointify({A1, A2}, {2, 2}, 1000);
  std::string why;
  CHECK_MESSAGE(outputs_hold(plan, why), why);
  CHECK(check_disjointify(plan).all());
  REQUIRE(plan.output_tail_min.size() == 2);
  CHECK(plan.output_tail_min[0] > 0);
  CHECK(plan.output_tail_min[1] > 0);
  CHECK(plan.M == std::vector<Index>{4, 4});
  for (Index s : plan.s) CHECK(s >= 4);

  SUBCASE("the plan is what the thinning pseudocode produces") {
    const Index h = 20000;
    auto ref = oracle::thinning({as_vector(A1.clipped(h)), as_vector(A2.clipped(h))}, {2, 2}, h, 1000);
    auto small = disjointify({A1.clipped(h), A2.clipped(h)}, {2, 2}, 1000);
    CHECK(small.s == ref.s);
    CHECK(as_vector(small.outputs[0]) == ref.B[0]);
    CHECK(as_vector(small.outputs[1]) == ref.B[1]);
  }
}

TEST_CASE("disjointify with one set keeps gaps of at least 2 N") {
  const Index H = 5000;
  auto plan = disjointify({IndexSet::interval(H, 0, H)}, {5}, 100);
  auto b = as_vector(plan.outputs[0]);
  REQUIRE(!b.empty());
  CHECK(b.front() >= 5);
  for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] - b[i - 1] >= 10);
  CHECK(plan.outputs[0] == plan.thinned[0]);
}

TEST_CASE("disjointify refuses sets without tail density") {
  const Index H = 2000;
  auto sparse = IndexSet(H);
  CHECK_THROWS_AS(disjointify({IndexSet::interval(H, 0, H), sparse}, {1, 1}, 100), ConstructionError);
  CHECK_THROWS_AS(disjointify({IndexSet(H)}, {1}, 10), ConstructionError);
  CHECK_THROWS_AS(disjointify({IndexSet(H)}, {1, 2}, 10), ParameterError);
  CHECK_THROWS_AS(disjointify({IndexSet(H, {1})}, {0}, 10), ParameterError);
  try {
    disjointify({IndexSet::interval(H, 0, H), sparse}, {1, 1}, 100);
  } catch (const ConstructionError& e) {
    CHECK(std::string(e.what()).find("set 2") != std::string::npos);
  }
}

TEST_CASE("disjointify outputs satisfy the four properties on random families") {
  std::mt19937_64 g(21);
  int succeeded = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const Index H = 20000;
    const std::size_t count = 1 + g() % 3;
    std::vector<IndexSet> A;
    std::vector<Index> N;
    for (std::size_t i = 0; i < count; ++i) {
      const Index m = 1 + static_cast<Index>(g() % 4);
      A.push_back(IndexSet::progression(H, static_cast<Index>(g() % static_cast<std::uint64_t>(m)), m));
      N.push_back(1 + static_cast<Index>(g() % 3));
    }
    try {
      auto plan = disjointify(A, N, 200);
      std::string why;
      CHECK_MESSAGE(outputs_hold(plan, why), why);
      CHECK(check_disjointify(plan).all());
      ++succeeded;
    } catch (const ConstructionError&) {
    }
  }
  CHECK(succeeded > 5);
}

TEST_CASE("check_disjointify catches corrupted plans") {
  const Index H = 100000;
  auto plan = disjointify({IndexSet::interval(H, 1, H), IndexSet::progression(H, 2, 2)}, {2, 2}, 1000);
  auto bad = plan;
  std::vector<Index> b1 = as_vector(bad.outputs[0]);
  b1.push_back(b1.front() + 1);  // one step from an existing member
  bad.outputs[0] = IndexSet::from_unsorted(H, b1);
  CHECK_FALSE(check_disjointify(bad).all());
  auto low = plan;
  low.N[1] = 100000;
  CHECK_FALSE(check_disjointify(low).min_bound);
}

TEST_CASE("E and F sets") {
  const Rational a(8), e(1, 8);
  auto b = default_b_sequence(3);
  CHECK(b == std::vector<Index>{12, 80, 448});
  auto sets = build_EF_sets(a, e, b, 3, 10000, 100);
  SUBCASE("E_1 membership from the definition") {
    for (Index n = 0; n <= 10000; ++n) {
      bool expect = false;
      for (int u = 2; u <= 6; u += 4) {
        auto I = oracle::interval(8, 1, 1, 8, 1, u);
        expect = expect || (n >= I.lo && n <= I.hi && n % 12 == 0);
      }
      CHECK(sets.E[0].contains(n) == expect);
    }
    CHECK(as_vector(sets.E[0]) == std::vector<Index>{60, 72});
  }
  SUBCASE("E_p and F_q never meet") {
    for (const auto& E : sets.E)
      for (const auto& F : sets.F) CHECK(set_intersection(E, F).empty());
  }
  SUBCASE("levels whose b_p exceeds the horizon are empty with a warning") {
    auto tiny = build_EF_sets(a, e, {12, 20000}, 2, 10000, 100);
    CHECK(tiny.E[1].empty());
    CHECK_FALSE(tiny.warnings.empty());
  }
}

TEST_CASE("large subsets and their canonical order") {
  CHECK(large_subset_count(4) == 11);
  CHECK(large_subset_count(2) == 3);
  CHECK(large_subset_count(1) == 1);
  auto f = first_large_subsets(4, 11);
  REQUIRE(f.size() == 11);
  // increasing bit-vectors with at least two bits: 3, 5, 6, 7, 9, 10, 11, 12, 13, 14, 15
  std::vector<int> masks;
  for (const auto& s : f) {
    int m = 0;
    for (Index i : s) m |= 1 << i;
    masks.push_back(m);
  }
  CHECK(masks == std::vector<int>{3, 5, 6, 7, 9, 10, 11, 12, 13, 14, 15});
  auto s1 = sampled_large_subsets(10, 5, 3), s2 = sampled_large_subsets(10, 5, 3);
  CHECK(s1 == s2);
  for (const auto& s : s1) CHECK(s.size() >= 5);
}

TEST_CASE("bad set with J1 = 4 in full mode keeps density 1/4") {
  BadSetParams p;
  p.J = {4};
  p.horizon = 8191;
  auto bs = build_bad_set(p);
  CHECK(bs.M[0] == 8192);
  CHECK(bs.family_count[0] == 11);
  auto [count, n1] = oracle::min_ratio(as_vector(bs.set), 8191);
  CHECK(4 * count >= n1);
  SUBCASE("blocks follow the enumerated families") {
    auto fam = first_large_subsets(4, 11);
    for (Index j = 0; j < 11; ++j)
      for (Index s = Index{1} << j; s < (Index{1} << (j + 1)) && (s + 1) * 4 <= 8192; ++s) {
        std::vector<Index> got, want;
        for (Index n = 4 * s; n < 4 * s + 4; ++n)
          if (bs.set.contains(n)) got.push_back(n);
        for (Index f : fam[static_cast<std::size_t>(j)]) want.push_back(4 * s + f);
        CHECK(got == want);
      }
    for (Index n = 0; n < 4; ++n) CHECK(bs.set.contains(n));
  }
}

TEST_CASE("bad set with J1 = 2") {
  BadSetParams p;
  p.J = {2};
  p.horizon = 15;
  auto bs = build_bad_set(p);
  CHECK(bs.family_count[0] == 3);
  CHECK(bs.M[0] == 16);
  auto [count, n1] = oracle::min_ratio(as_vector(bs.set), 15);
  CHECK(4 * count >= n1);
}

TEST_CASE("sampled bad set on two levels") {
  BadSetParams p;
  p.J = {2, 64};
  p.sampled = true;
  p.sample_count = 4;
  p.seed = 5;
  p.k_max = 2;
  p.horizon = 6000;
  auto a = build_bad_set(p), b = build_bad_set(p);
  CHECK(a.set == b.set);
  CHECK(a.M[0] == 32);
  CHECK(a.M[1] == 81 * 64);
  for (Index n : a.layers[1].members()) {
    CHECK(n >= 32);
    CHECK(n < 81 * 64);
  }
  for (Index n : a.layers[0].members()) CHECK(n < 32);
  p.J = {2, 40};
  CHECK_THROWS_AS(build_bad_set(p), ParameterError);
}

TEST_CASE("full mode refuses family counts above the cap") {
  BadSetParams p;
  p.J = {30};
  p.horizon = 100;
  CHECK_THROWS_AS(build_bad_set(p), BudgetError);
}

TEST_CASE("bad-set parameters from JSON") {
  auto p = BadSetParams::from_json({{"J", {4}}, {"mode", "full"}, {"horizon", 8191}});
  CHECK(p.J == std::vector<Index>{4});
  CHECK_FALSE(p.sampled);
  auto q = BadSetParams::from_json(
      {{"J", {2, 64}}, {"mode", {{"sampled", {{"count", 4}, {"seed", 9}}}}}, {"k_max", 2}, {"horizon", 10}});
  CHECK(q.sampled);
  CHECK(q.sample_count == 4);
  CHECK(q.seed == 9);
  CHECK_THROWS_AS(BadSetParams::from_json({{"mode", "other"}}), ParameterError);
}
