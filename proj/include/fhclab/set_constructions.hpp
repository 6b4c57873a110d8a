#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhclab/index_set.hpp"

namespace fhclab {

/// {2^{k-1} m : m odd} ∩ [1, horizon].
IndexSet dyadic_layers(int k, Index horizon);

struct IntegerInterval {
  Index lo = 0;
  Index hi = -1;
  bool empty() const { return lo > hi; }
  Index length() const { return empty() ? 0 : hi - lo + 1; }
  bool contains(Index n) const { return lo <= n && n <= hi; }
  friend bool operator==(const IntegerInterval&, const IntegerInterval&) = default;
};

/// Integer points of [(1 - mult*eps) a^u, (1 + mult*eps) a^u], unclipped.
/// Throws ParameterError if the bounds do not fit in 64 bits.
IntegerInterval geometric_interval(const Rational& a, const Rational& eps, int mult, int u);

/// Intervals u -> I_u for u = 1..u_max, clipped to [0, horizon]; intervals lying
/// entirely above the horizon are omitted.
struct IntervalFamily {
  Rational a;
  Rational eps;
  int mult = 1;
  Index horizon = 0;
  std::map<int, IntegerInterval> intervals;

  bool pairwise_disjoint() const;
  /// u with n in I_u, or 0.
  int find(Index n) const;
};

IntervalFamily geometric_intervals(const Rational& a, const Rational& eps, int mult, int u_max,
                                   Index horizon);

struct IntervalConditionReport {
  Rational a;
  Rational eps;
  int u_max = 0;
  bool disjoint = true;    // I_u^{4e} ∩ I_v^{4e} empty for v < u
  bool difference = true;  // I_u^{2e} - I_v^{2e} inside I_u^{4e} for v < u
  bool shift = true;       // I_v^{e} + [-v, v] inside I_v^{2e}
  std::string first_failure;

  bool all() const { return disjoint && difference && shift; }
};

/// Evaluates the three sufficient inequalities exactly for all 1 <= v < u <= u_max
/// (and the shift condition for every v <= u_max).
IntervalConditionReport verify_interval_conditions(const Rational& a, const Rational& eps,
                                                   int u_max);

struct DisjointifyPlan {
  std::vector<IndexSet> inputs;    // A_i
  std::vector<Index> N;            // N_i
  std::vector<Index> M;            // 2 max_{j<=i} N_j
  std::vector<Index> s;            // thinning steps
  std::vector<IndexSet> thinned;   // A_{i,s(i)}
  std::vector<IndexSet> outputs;   // B_i
  std::vector<double> thinned_tail_min;
  std::vector<double> output_tail_min;
  Index burn_in = 0;
};

struct DisjointifyCheck {
  bool subset = true;
  bool min_bound = true;
  bool disjoint = true;
  bool separation = true;
  std::string first_failure;

  bool all() const { return subset && min_bound && disjoint && separation; }
};

/// Every s-th element (1-based positions s, 2s, ...) of a.
IndexSet thin(const IndexSet& a, Index s);

/// Thins each A_i so the outputs are pairwise disjoint, start at N_i, and are
/// separated by N_i + N_j. Densities use finite-horizon tails from burn_in.
DisjointifyPlan disjointify(const std::vector<IndexSet>& A, const std::vector<Index>& N,
                            Index burn_in);

/// Rechecks the four output properties on a plan.
DisjointifyCheck check_disjointify(const DisjointifyPlan& plan);

struct EFSets {
  std::vector<IndexSet> E;  // index p-1
  std::vector<IndexSet> F;
  std::vector<double> E_tail_min;
  std::vector<double> F_tail_min;
  std::vector<std::string> warnings;
};

/// b_q = 4^q (2q + 1), q = 1..count.
std::vector<Index> default_b_sequence(int count);

/// E_p from the even layers A_{2p}, F_p from the odd layers A_{2p+1}, each the union of
/// I_u ∩ b_p N over u in the layer. b[p-1] = b_p.
EFSets build_EF_sets(const Rational& a, const Rational& eps, const std::vector<Index>& b,
                     int p_max, Index horizon, Index burn_in);

struct BadSetParams {
  std::vector<Index> J;
  bool sampled = false;
  Index sample_count = 0;
  std::uint64_t seed = 0;
  int k_max = 1;
  Index horizon = 0;
  Index full_cap = 1000000;

  static BadSetParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct BadSet {
  IndexSet set;
  std::vector<IndexSet> layers;     // A_k, index k-1, clipped
  std::vector<Integer> family_count;  // C_k in force
  std::vector<Integer> M;           // M_k = (k+1)^{C_k} J_k
  std::vector<std::vector<std::vector<Index>>> families;  // F_{k,j} materialized, [k-1][j]
};

/// Number of subsets of [0, J) with at least J/2 elements.
Integer large_subset_count(Index J);

/// The first `count` subsets of [0, J) with at least J/2 elements, in increasing order of
/// characteristic bit-vector (index 0 least significant). Requires J <= 62.
std::vector<std::vector<Index>> first_large_subsets(Index J, Index count);

/// `count` seeded subsets of [0, J), each with at least J/2 elements.
std::vector<std::vector<Index>> sampled_large_subsets(Index J, Index count, std::uint64_t seed);

BadSet build_bad_set(const BadSetParams& params);

}  // namespace fhclab
