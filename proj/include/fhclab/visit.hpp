#pragma once

#include <vector>

#include "fhclab/index_set.hpp"
#include "fhclab/linear_operator.hpp"

namespace fhclab {

/// Bit budget per orbit vector in exact mode before refusing and pointing at float mode.
inline constexpr std::size_t kExactOrbitBitBudget = std::size_t{1} << 22;

namespace detail {

template <class Scalar>
void check_exact_growth(const Vector<Scalar>& y, Index n) {
  if constexpr (is_exact_v<Scalar>) {
    std::size_t bits = 0;
    for (Index i = 0; i < y.size(); ++i) bits += rational_bits(y(i));
    if (bits > kExactOrbitBitBudget)
      throw ArithmeticModeError("exact orbit exceeded " + std::to_string(kExactOrbitBitBudget) +
                                " bits at step " + std::to_string(n) + "; rerun in float mode");
  } else {
    (void)y;
    (void)n;
  }
}

}  // namespace detail

/// Calls f(n, T^n x) for n = 0..horizon, by repeated application.
template <class Scalar, class F>
void for_each_orbit_point(const LinearOperator<Scalar>& T, Vector<Scalar> x, Index horizon,
                          F&& f) {
  if (T.rows() != T.cols() || T.cols() != x.size())
    throw ParameterError("operator and vector dimensions are incompatible");
  if (horizon < 0) throw ParameterError("orbit horizon must be non-negative");
  for (Index n = 0;; ++n) {
    f(n, static_cast<const Vector<Scalar>&>(x));
    if (n == horizon) break;
    x = T.apply(x);
    detail::check_exact_growth(x, n + 1);
  }
}

/// {n in [0, horizon] : ||T^n x - center|| < radius}, norm taken from x's tag.
template <class Scalar>
IndexSet visit_set(const LinearOperator<Scalar>& T, const BlockVector<Scalar>& x,
                   const BlockVector<Scalar>& center, const Scalar& radius, Index horizon) {
  if (center.dim() != x.dim()) throw ParameterError("center and x have different dimensions");
  if (!(radius > Scalar(0))) throw ParameterError("visit radius must be positive");
  std::vector<Index> hits;
  for_each_orbit_point(T, x.coords, horizon, [&](Index n, const Vector<Scalar>& y) {
    Vector<Scalar> d = y - center.coords;
    if (norm_less_than<Scalar>(d, x.norm_tag, radius)) hits.push_back(n);
  });
  return IndexSet(horizon, std::move(hits));
}

}  // namespace fhclab
