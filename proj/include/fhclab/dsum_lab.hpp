#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhclab/block_vector.hpp"
#include "fhclab/linear_operator.hpp"

namespace fhclab {

/// L blocks of K coordinates, normed by the max of block l1 norms. Block l is 1-based.
struct DSumSpace {
  Index L = 0;
  Index K = 0;
  std::vector<Rational> eps;  // eps[l-1] = eps_l

  /// eps_l = 2^-l.
  static DSumSpace dyadic(Index L, Index K);
  /// {"L": int, "K": int, "eps_rule": "dyadic"} or {"L", "K", "eps": [..]}.
  static DSumSpace from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  Index dim() const { return L * K; }
  Index index(Index l, Index k) const { return (l - 1) * K + k; }
  NormTag norm_tag() const { return NormTag::c0_sum_of_ell1(K); }
  Rational eps_of(Index l) const { return eps.at(static_cast<std::size_t>(l - 1)); }
};

struct DSumOps {
  LinearOperator<Rational> T;   // ⊕ (I + 2^-l B)
  LinearOperator<Rational> T1;  // ⊕ (I + B)
  LinearOperator<Rational> D;   // ⊕ diag(2^-lk)
  LinearOperator<Rational> V;   // one block: (Vy)_k = sum_{j>=1} 2^-jk y_j, k >= 1
  LinearOperator<Rational> R0;  // block l of R0 x is eps_l V x(1)
};

/// Operators on a single block.
LinearOperator<Rational> block_shift(Index K);                      // B e_{k+1} = e_k
LinearOperator<Rational> block_T(Index K, Index l);                 // I + 2^-l B
LinearOperator<Rational> block_D(Index K, Index l);                 // diag(2^-lk)
LinearOperator<Rational> block_V(Index K);

DSumOps build_dsum_ops(const DSumSpace& space);

/// Every entry stays inside one block and never moves to a higher coordinate.
bool never_raises_index(const LinearOperator<Rational>& op, const DSumSpace& space);

/// (I + B) D(l) = D(l) (I + 2^-l B) on the truncation. Only exact arithmetic is accepted.
bool check_intertwining(const DSumSpace& space, Index l, Arithmetic mode = Arithmetic::exact);
/// T1 D = D T on the whole space.
bool check_intertwining_full(const DSumSpace& space, const DSumOps& ops);
/// Generic form used for negative controls: a b = c d.
bool operators_commute_as(const LinearOperator<Rational>& a, const LinearOperator<Rational>& b,
                          const LinearOperator<Rational>& c, const LinearOperator<Rational>& d);

struct CrucialEstimateReport {
  Index m = 0;
  Index l = 0;
  std::vector<Index> k;
  std::vector<Rational> delta;  // delta(k)
  std::vector<Rational> bound;  // 2^-k ||x(1)||_1 / |x_m(1)|
  Rational max_ratio = 0;       // max |delta(k)| 2^k |x_m(1)| / ||x(1)||_1
  bool ok = true;
};

/// Evaluates <e_k*(l), R0 x> = eps_l x_m(1) 2^-mk (1 + delta(k)) for k in [k_lo, k_hi].
/// x must satisfy x_m(1) != 0 and x_j(1) = 0 for 1 <= j < m.
CrucialEstimateReport crucial_estimate_check(const DSumSpace& space, const DSumOps& ops,
                                             const Vector<Rational>& x, Index m, Index l,
                                             Index k_lo, Index k_hi);

struct RBuild {
  LinearOperator<Rational> R;
  bool maps_u_to_v = false;
  Index correction_rank = 0;  // rank(R - R0)
};

/// R x = R0 x + (x_0(1) / u_0(1)) (v - R0 u).
RBuild build_R(const DSumSpace& space, const DSumOps& ops, const Vector<Rational>& u,
               const Vector<Rational>& v);

/// |v_k(l)| <= 2^-lk for every coordinate.
bool within_envelope(const DSumSpace& space, const Vector<Rational>& v);

/// Operator norm on the c0-sum of l1 blocks: max_l sum_l' ||P_l A P_l'||_{1->1}. Exact.
Rational dsum_operator_norm(const LinearOperator<Rational>& op, const DSumSpace& space);

struct InvertibilityReport {
  Rational c;
  Rational norm_R;
  bool neumann = false;                    // c > ||R||, exact
  std::string method;                      // neumann | determinant | singular-value
  std::optional<Rational> determinant;     // exact det(cI + R) when computed
  long double sigma_min = 0;               // singular-value path only
  bool invertible = false;
};

/// cI + R on the truncation. Certified by c > ||R|| when possible; otherwise the
/// determinant (exact, blocks up to kExactDeterminantLimit) or the smallest singular value.
/// When R only reads block 1, det(cI + R) = c^{(L-1)K} det(cI + R_11).
inline constexpr Index kExactDeterminantLimit = 24;
InvertibilityReport check_invertible_shift(const LinearOperator<Rational>& R,
                                           const DSumSpace& space, const Rational& c);

}  // namespace fhclab
