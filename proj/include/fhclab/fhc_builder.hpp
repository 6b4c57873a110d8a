#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fhclab/block_vector.hpp"
#include "fhclab/index_set.hpp"
#include "fhclab/linear_operator.hpp"
#include "fhclab/set_constructions.hpp"
#include "fhclab/shift_lab.hpp"
#include "fhclab/visit.hpp"

namespace fhclab {

/// Bounds on the pieces of T^n x - x_p for n in B_p, measured in the targets' norm.
struct ErrorSplit {
  Rational s_side_low;   // sum_{q<=p} of S-tails beyond N_p, <= p eps_p
  Rational s_side_high;  // sum_{q>p} of S-tails beyond N_q, <= sum_{q>p} eps_q
  Rational t_side = 0;   // T^{n-m} x_q with n - m > deg x_q vanishes identically
  Rational budget;       // p eps_p + sum_{q>p} eps_q
  Rational alpha;

  bool holds() const {
    return s_side_low + s_side_high + t_side <= budget && budget < alpha;
  }
};

template <class Scalar>
struct FHCCPlan {
  std::vector<BlockVector<Rational>> targets;  // x_p
  std::vector<Index> degree;                   // largest non-zero coordinate of x_p
  std::vector<Rational> alpha;
  std::vector<Rational> eps;
  std::vector<Index> N;
  Rational min_weight;                         // c: every w_k on the range is >= c > 1
  DisjointifyPlan sets;                        // B_p = sets.outputs[p-1]
  BlockVector<Scalar> x;
  Index K = 0;
  Index orbit_horizon = 0;
  std::vector<ErrorSplit> split;
  bool invariant_ok = true;                    // p eps_p + sum_{q>p+1} eps_q < alpha_p
  std::vector<Index> terms_used;               // per p: n in B_p placed into x
  long double truncation_slack = 0;            // dropped terms, bound on [0, orbit_horizon]

  const IndexSet& B(std::size_t p) const { return sets.outputs.at(p - 1); }
};

namespace detail {

/// eps_p = min(alpha_p, 2^-p) / (2(p+1)).
std::vector<Rational> fhcc_epsilons(const std::vector<Rational>& alpha);

/// Least N > max_{i<=p} deg x_i with c^-N / (1 - 1/c) ||x_i|| <= eps_p for all i <= p.
std::vector<Index> fhcc_thresholds(const std::vector<Rational>& target_norms,
                                   const std::vector<Index>& degree,
                                   const std::vector<Rational>& eps, const Rational& c);

/// c^-e / (1 - 1/c) in extended precision, through logarithms.
long double geometric_tail(const Rational& c, Index e);

/// W(k) / W(k + n) as a scalar without forming W itself in float mode.
template <class Scalar>
Scalar shift_ratio(const WeightSystem& w, Index k, Index n) {
  if constexpr (is_exact_v<Scalar>) {
    return w.cumulative(k) / w.cumulative(k + n);
  } else {
    if (w.is_dyadic())
      return std::ldexp(Scalar(1), static_cast<int>(w.log2_cumulative(k) -
                                                    w.log2_cumulative(k + n)));
    return scalar_cast<Scalar>(w.cumulative(k) / w.cumulative(k + n));
  }
}

Index vector_degree(const Vector<Rational>& v);

}  // namespace detail

/// The frequently hypercyclic vector x = sum_p sum_{n in B_p} S^n x_p for T = B_w, S its
/// forward right inverse, assembled on span(e_0 .. e_{K-1}).
template <class Scalar>
FHCCPlan<Scalar> fhcc_vector(const WeightSystem& w, const std::vector<BlockVector<Rational>>& targets,
                             const std::vector<IndexSet>& A, const std::vector<Rational>& alpha,
                             Index K, Index orbit_horizon, Index disjointify_burn_in = 1000) {
  const std::size_t P = targets.size();
  if (P == 0) throw ParameterError("at least one target is required");
  if (A.size() != P || alpha.size() != P)
    throw ParameterError("targets, sets and radii must have equal length");
  if (K < 1 || orbit_horizon < 0) throw ParameterError("K and orbit_horizon must be positive");
  if (K - 1 > w.horizon()) throw ParameterError("weight horizon shorter than K - 1");

  FHCCPlan<Scalar> plan;
  plan.targets = targets;
  plan.alpha = alpha;
  plan.K = K;
  plan.orbit_horizon = orbit_horizon;
  std::vector<Rational> norms;
  Index max_deg = 0;
  for (std::size_t p = 0; p < P; ++p) {
    const auto& t = targets[p];
    if (t.dim() > K) throw ParameterError("target " + std::to_string(p + 1) + " is longer than K");
    if (!(alpha[p] > 0)) throw ParameterError("radii must be positive");
    Index d = detail::vector_degree(t.coords);
    if (d < 0) throw ParameterError("target " + std::to_string(p + 1) + " is zero");
    plan.degree.push_back(d);
    max_deg = std::max(max_deg, d);
    norms.push_back(norm<Rational>(t));
  }
  if (K < orbit_horizon + max_deg)
    throw ParameterError("K = " + std::to_string(K) + " is below orbit_horizon + max degree = " +
                         std::to_string(orbit_horizon + max_deg) +
                         "; truncation would corrupt orbit values");
  for (const auto& a : A)
    if (a.horizon() < K - 1) throw ParameterError("every A_p must reach the horizon K - 1");

  plan.min_weight = w.weight(1);
  for (Index k = 2; k < K; ++k) plan.min_weight = std::min(plan.min_weight, w.weight(k));
  if (!(plan.min_weight > 1))
    throw DomainError("weights must stay above 1 on [1, K) so S-orbits decay geometrically");
  const Rational& c = plan.min_weight;

  plan.eps = detail::fhcc_epsilons(alpha);
  for (std::size_t p = 0; p < P; ++p) {
    Rational rest = 0;
    for (std::size_t q = p + 2; q < P; ++q) rest += plan.eps[q];
    if (!(Rational(static_cast<long>(p + 1)) * plan.eps[p] + rest < alpha[p]))
      plan.invariant_ok = false;
  }
  if (!plan.invariant_ok) throw ConstructionError("epsilon rule violates the plan invariant");
  plan.N = detail::fhcc_thresholds(norms, plan.degree, plan.eps, c);

  for (std::size_t p = 0; p < P; ++p) {
    ErrorSplit s;
    s.alpha = alpha[p];
    s.budget = Rational(static_cast<long>(p + 1)) * plan.eps[p];
    for (std::size_t q = p + 1; q < P; ++q) s.budget += plan.eps[q];
    const Rational geom = Rational(1) / (1 - Rational(1) / c);
    for (std::size_t q = 0; q < P; ++q) {
      if (q <= p)
        s.s_side_low += rational_pow(c, -static_cast<int>(plan.N[p])) * geom * norms[q];
      else
        s.s_side_high += rational_pow(c, -static_cast<int>(plan.N[q])) * geom * norms[q];
    }
    plan.split.push_back(s);
  }

  plan.sets = disjointify(A, plan.N, disjointify_burn_in);

  const NormTag tag = targets[0].norm_tag;
  Vector<Scalar> x = Vector<Scalar>::Zero(K);
  for (std::size_t p = 0; p < P; ++p) {
    const auto& xp = targets[p].coords;
    const Index last = K - 1 - plan.degree[p];
    Index used = 0;
    for (Index n : plan.sets.outputs[p].members()) {
      if (n > last) break;
      ++used;
      for (Index k = 0; k <= plan.degree[p]; ++k) {
        if (xp(k) == 0) continue;
        x(k + n) += scalar_cast<Scalar>(xp(k)) * detail::shift_ratio<Scalar>(w, k, n);
      }
    }
    plan.terms_used.push_back(used);
    // dropped m > last reach the orbit window [0, H] as S^{m-n} x_p with m - n > last - H
    plan.truncation_slack +=
        detail::geometric_tail(c, last + 1 - orbit_horizon) * to_real(norms[p]);
  }
  plan.x = BlockVector<Scalar>(std::move(x), tag);
  return plan;
}

struct FhccOrbitCheck {
  std::vector<long double> max_error;  // per p, over n in B_p ∩ [0, H]
  std::vector<Index> max_error_at;
  std::vector<Index> checked;
  std::vector<long double> bound;      // 3 alpha_p + slack
  std::optional<std::size_t> first_failure;

  bool pass() const { return !first_failure; }
};

/// ||T^n x - x_p|| for every n in B_p within the orbit horizon, against 3 alpha_p + slack.
template <class Scalar>
FhccOrbitCheck check_fhcc_orbit(const FHCCPlan<Scalar>& plan, const LinearOperator<Scalar>& T) {
  const std::size_t P = plan.targets.size();
  FhccOrbitCheck r;
  r.max_error.assign(P, 0);
  r.max_error_at.assign(P, -1);
  r.checked.assign(P, 0);
  std::vector<Vector<Scalar>> centers;
  for (std::size_t p = 0; p < P; ++p) {
    r.bound.push_back(3 * to_real(plan.alpha[p]) + plan.truncation_slack);
    Vector<Scalar> c = Vector<Scalar>::Zero(plan.K);
    c.head(plan.targets[p].dim()) = cast_vector<Scalar>(plan.targets[p].coords);
    centers.push_back(std::move(c));
  }
  for_each_orbit_point(T, plan.x.coords, plan.orbit_horizon, [&](Index n, const Vector<Scalar>& y) {
    for (std::size_t p = 0; p < P; ++p) {
      if (!plan.B(p + 1).contains(n)) continue;
      Vector<Scalar> d = y - centers[p];
      long double e = to_real(norm<Scalar>(d, plan.x.norm_tag));
      ++r.checked[p];
      if (e > r.max_error[p]) {
        r.max_error[p] = e;
        r.max_error_at[p] = n;
      }
      if (!(e < r.bound[p]) && !r.first_failure) r.first_failure = p + 1;
    }
  });
  return r;
}

struct OrbitDensityEntry {
  IndexSet visits;       // N_T(x, B(target, radius)) within the horizon
  IndexSet visits_in_A;  // ∩ A_i
  DensityProfile profile;
};

/// One orbit pass; per target the visit set, its trace on A_i, and the density profile.
template <class Scalar>
std::vector<OrbitDensityEntry> orbit_density_report(const LinearOperator<Scalar>& T,
                                                    const BlockVector<Scalar>& x,
                                                    const std::vector<BlockVector<Scalar>>& targets,
                                                    const std::vector<Scalar>& radii,
                                                    const std::vector<IndexSet>& A, Index horizon,
                                                    Index burn_in) {
  const std::size_t P = targets.size();
  if (radii.size() != P || A.size() != P)
    throw ParameterError("targets, radii and sets must have equal length");
  if (T.cols() != x.dim()) throw ParameterError("operator and vector dimensions differ");
  std::vector<Vector<Scalar>> centers;
  for (const auto& t : targets) {
    if (t.dim() > x.dim()) throw ParameterError("target longer than the orbit vector");
    Vector<Scalar> c = Vector<Scalar>::Zero(x.dim());
    c.head(t.dim()) = t.coords;
    centers.push_back(std::move(c));
  }
  for (const auto& r : radii)
    if (!(r > Scalar(0))) throw ParameterError("radii must be positive");
  for (const auto& a : A)
    if (a.horizon() < horizon) throw ParameterError("every A_i must reach the orbit horizon");
  std::vector<std::vector<Index>> hits(P);
  for_each_orbit_point(T, x.coords, horizon, [&](Index n, const Vector<Scalar>& y) {
    for (std::size_t i = 0; i < P; ++i) {
      Vector<Scalar> d = y - centers[i];
      if (norm_less_than<Scalar>(d, x.norm_tag, radii[i])) hits[i].push_back(n);
    }
  });
  std::vector<OrbitDensityEntry> out;
  for (std::size_t i = 0; i < P; ++i) {
    OrbitDensityEntry e;
    e.visits = IndexSet(horizon, std::move(hits[i]));
    e.visits_in_A = set_intersection(e.visits, A[i]);
    e.profile = density_profile(e.visits_in_A, burn_in);
    out.push_back(std::move(e));
  }
  return out;
}

struct InterpolationResult {
  LinearOperator<Rational> op;
  std::vector<Vector<Rational>> functionals;  // v_l*, with v_l*(z_s) = [s == l] for s <= l
  std::vector<Rational> steps;                // ||v_l*||_inf ||x_l - L_{l-1} z_l||_1
  Rational perturbation = 0;                  // sum of steps
  bool within_eps = false;
};

/// L_0 = S, L_l = L_{l-1} + (x_l - L_{l-1} z_l) v_l*. Afterwards L z_l = x_l for every l.
/// Dependent z's raise RankError.
InterpolationResult similarity_interpolation(const LinearOperator<Rational>& S,
                                             const std::vector<Vector<Rational>>& z,
                                             const std::vector<Vector<Rational>>& x,
                                             const Rational& eps);

}  // namespace fhclab
