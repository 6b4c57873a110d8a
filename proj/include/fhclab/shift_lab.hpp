#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhclab/index_set.hpp"
#include "fhclab/linear_operator.hpp"
#include "fhclab/set_constructions.hpp"

namespace fhclab {

/// Positive weights w_1..w_H with cumulative products W(n) = w_1 ... w_n, W(0) = 1.
/// Power-of-two systems are stored as integer log2 W; others as exact rationals.
class WeightSystem {
 public:
  WeightSystem() = default;

  /// From log2 W(0..H); log2 W(0) must be 0.
  static WeightSystem from_log2_cumulative(std::vector<Index> log2_w);
  /// From weights w_1..w_H (w[0] is w_1).
  static WeightSystem from_weights(const std::vector<Rational>& w);
  static WeightSystem constant(const Rational& c, Index horizon);

  Index horizon() const { return horizon_; }
  bool is_dyadic() const { return dyadic_; }

  /// w_n for 1 <= n <= H.
  Rational weight(Index n) const;
  /// W(n) for 0 <= n <= H.
  Rational cumulative(Index n) const;
  /// log2 W(n); dyadic systems only.
  Index log2_cumulative(Index n) const;
  long double cumulative_real(Index n) const;
  /// W(n) >= threshold, exactly.
  bool cumulative_at_least(Index n, const Rational& threshold) const;
  /// W(n) > threshold, exactly.
  bool cumulative_above(Index n, const Rational& threshold) const;

  /// Copy with w_n replaced.
  WeightSystem with_weight(Index n, const Rational& value) const;

  /// Tent invariants: dyadic, log2 W >= 0 and |log2 W(n) - log2 W(n-1)| <= 1.
  /// Returns the first offending n, if any.
  std::optional<Index> tent_invariant_violation() const;
  void require_tent_invariants(const std::string& name) const;

 private:
  void check_index(Index n, Index lo) const;

  Index horizon_ = 0;
  bool dyadic_ = true;
  std::vector<Index> log2_;       // dyadic storage, size H+1
  std::vector<Rational> cum_;     // general storage, size H+1
};

/// Plateau S with height h (log2 units) inside a support window J.
struct TentSpec {
  IndexSet plateau;
  Index height = 0;
  IndexSet window;
  std::string label;
};

/// log2 W(n) = max(0, max_t (h_t - d(n, S_t))). Every painted point of a tent must lie in
/// its window and n = 0 is never painted; otherwise ConstructionError.
WeightSystem plateau_weights(const std::vector<TentSpec>& tents, Index horizon);

struct CounterexampleParams {
  Rational a{8};
  Rational eps{1, 8};
  std::vector<Index> b;  // b_1..b_{p_max}; empty means the default 4^q (2q+1)
  int p_max = 3;
  Index horizon = 1000000;

  std::vector<Index> b_or_default() const;
  static CounterexampleParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct CounterexamplePair {
  CounterexampleParams params;
  WeightSystem w;        // built from even layers
  WeightSystem w_prime;  // built from odd layers
  EFSets sets;           // E_p for w, F_p for w'
  std::size_t tent_count_w = 0;
  std::size_t tent_count_w_prime = 0;
};

/// Tents of the even (parity 0) or odd (parity 1) weight, covering every plateau whose
/// window reaches [0, horizon].
std::vector<TentSpec> counterexample_tents(const CounterexampleParams& params, int parity);

CounterexamplePair counterexample_pair(const CounterexampleParams& params);

struct WindowMinimum {
  int j = 0;                 // window [2^j, 2^{j+1}); n = 0 is reported as j = -1
  long double log2_min = 0;  // log2 of min W over the set in the window
  Index argmin = 0;
};

struct FhcShiftReport {
  bool disjoint = true;
  std::vector<std::vector<WindowMinimum>> windows;  // per p
  std::vector<bool> non_decreasing;                 // per p
  std::vector<bool> grows;                          // per p: last window above first, or vacuous
  bool separation = true;
  Index pairs_checked = 0;
  std::string first_failure;

  bool growth_ok() const;
  bool all_non_decreasing() const;
  bool pass() const { return disjoint && growth_ok() && separation; }
};

/// Divergence surrogate along each E_p (windowed minima of W) and the exact separation
/// W(m - n) >= max(M_p, M_q) for m in E_p, n in E_q, m > n. M defaults to 2^p.
FhcShiftReport check_fhc_shift(const WeightSystem& w, const std::vector<IndexSet>& E,
                               std::vector<Rational> M, Index horizon);

struct GpReport {
  int p = 0;
  IndexSet G;
  bool inclusion = true;
  std::optional<Index> first_violation;
  double tail_max = 0.0;
  Index burn_in = 0;
};

/// G_p = {n : W(n) >= 2^p and W'(n) >= 2^p} and the inclusion in ⋃_{p<=q<=p_max} (b_q N + [-q, q]).
GpReport gp_inclusion_check(const CounterexamplePair& pair, int p, Index horizon, Index burn_in);

/// (B_w x)_k = w_{k+1} x_{k+1}; last coordinate 0.
template <class Scalar>
Vector<Scalar> apply_backward_shift(const WeightSystem& w, const Vector<Scalar>& x) {
  if (x.size() > w.horizon() + 1)
    throw ParameterError("vector longer than the weight horizon + 1");
  Vector<Scalar> y = Vector<Scalar>::Zero(x.size());
  for (Index k = 0; k + 1 < x.size(); ++k) y(k) = scalar_cast<Scalar>(w.weight(k + 1)) * x(k + 1);
  return y;
}

/// Matrix of B_w on span(e_0..e_{dim-1}).
template <class Scalar>
LinearOperator<Scalar> backward_shift_operator(const WeightSystem& w, Index dim) {
  if (dim > w.horizon() + 1) throw ParameterError("dimension exceeds weight horizon + 1");
  std::vector<Triplet<Scalar>> t;
  for (Index k = 0; k + 1 < dim; ++k)
    t.emplace_back(int(k), int(k + 1), scalar_cast<Scalar>(w.weight(k + 1)));
  return LinearOperator<Scalar>::from_triplets(dim, dim, t);
}

/// Right inverse of B_w: e_k -> e_{k+1} / w_{k+1}, truncated (the last basis vector maps to 0).
template <class Scalar>
LinearOperator<Scalar> forward_shift_inverse(const WeightSystem& w, Index dim) {
  if (dim > w.horizon() + 1) throw ParameterError("dimension exceeds weight horizon + 1");
  std::vector<Triplet<Scalar>> t;
  for (Index k = 0; k + 1 < dim; ++k)
    t.emplace_back(int(k + 1), int(k), scalar_cast<Scalar>(Rational(1) / w.weight(k + 1)));
  return LinearOperator<Scalar>::from_triplets(dim, dim, t);
}

struct DefectReport {
  IndexSet C;
  DensityProfile profile;
  double margin = 0.05;
  bool bounded_away = false;  // tail_max < 1 - margin
};

/// C_M = {n : W(n) > M} and its density profile.
DefectReport transitivity_defect(const WeightSystem& w, const Rational& M, Index horizon,
                                 Index burn_in, double margin = 0.05);

/// Asymptotic upper-density bound for C_{2^p} built from the counterexample tents:
/// 8 eps / (1 + 4 eps) * a / (a - 1) + sum_{q > p} (2q + 1) / b_q.
double defect_closed_form_bound(const CounterexampleParams& params, int p);

// CSV "n,w_n,log2W_n" for n = 0..H (w_0 column left empty).
void write_weights_csv(std::ostream& out, const WeightSystem& w);

}  // namespace fhclab
