#include "fhclab/dsum_lab.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include <Eigen/SVD>

namespace fhclab {

DSumSpace DSumSpace::dyadic(Index L, Index K) {
  DSumSpace s;
  s.L = L;
  s.K = K;
  for (Index l = 1; l <= L; ++l) s.eps.push_back(pow2(-static_cast<int>(l)));
  s.validate();
  return s;
}

DSumSpace DSumSpace::from_json(const nlohmann::json& j) {
  std::vector<std::string> problems;
  Index L = 0, K = 0;
  DSumSpace s;
  try {
    L = j.at("L").get<Index>();
    K = j.at("K").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(std::string("L and K are required integers: ") + e.what());
  }
  if (problems.empty()) {
    if (j.contains("eps")) {
      s.L = L;
      s.K = K;
      for (const auto& e : j["eps"]) s.eps.push_back(parse_rational(e.get<std::string>()));
    } else {
      std::string rule = j.value("eps_rule", std::string("dyadic"));
      if (rule != "dyadic") problems.push_back("eps_rule must be \"dyadic\", got \"" + rule + "\"");
      else if (L >= 1 && L <= 60) s = dyadic(L, K);
    }
  }
  if (problems.empty()) {
    try {
      s.L = L;
      s.K = K;
      s.validate();
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "dsum space:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ParameterError(msg);
  }
  return s;
}

nlohmann::json DSumSpace::to_json() const {
  std::vector<std::string> e;
  for (const auto& x : eps) e.push_back(to_string(x));
  return {{"L", L}, {"K", K}, {"eps", e}};
}

void DSumSpace::validate() const {
  if (L < 1 || L > 60) throw ParameterError("L must lie in [1, 60]");
  if (K < 2 || K > 4096) throw ParameterError("K must lie in [2, 4096]");
  if (static_cast<Index>(eps.size()) != L) throw ParameterError("need one eps_l per block");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0)) throw ParameterError("eps_l must be positive");
    if (i > 0 && eps[i] > eps[i - 1]) throw ParameterError("eps_l must be non-increasing");
  }
}

LinearOperator<Rational> block_shift(Index K) {
  std::vector<Triplet<Rational>> t;
  for (Index k = 0; k + 1 < K; ++k) t.emplace_back(int(k), int(k + 1), Rational(1));
  return LinearOperator<Rational>::from_triplets(K, K, t);
}

LinearOperator<Rational> block_T(Index K, Index l) {
  return LinearOperator<Rational>::identity(K) + pow2(-static_cast<int>(l)) * block_shift(K);
}

LinearOperator<Rational> block_D(Index K, Index l) {
  std::vector<Triplet<Rational>> t;
  for (Index k = 0; k < K; ++k) t.emplace_back(int(k), int(k), pow2(-static_cast<int>(l * k)));
  return LinearOperator<Rational>::from_triplets(K, K, t);
}

LinearOperator<Rational> block_V(Index K) {
  std::vector<Triplet<Rational>> t;
  for (Index k = 1; k < K; ++k)
    for (Index j = 1; j < K; ++j) t.emplace_back(int(k), int(j), pow2(-static_cast<int>(j * k)));
  return LinearOperator<Rational>::from_triplets(K, K, t);
}

namespace {

// Block-diagonal assembly of per-block operators.
LinearOperator<Rational> direct_sum(const DSumSpace& s,
                                    const std::function<LinearOperator<Rational>(Index)>& block) {
  std::vector<Triplet<Rational>> t;
  for (Index l = 1; l <= s.L; ++l) {
    const auto op = block(l);
    const auto& m = op.matrix();
    const int off = static_cast<int>(s.index(l, 0));
    for (int c = 0; c < m.outerSize(); ++c)
      for (SparseMatrix<Rational>::InnerIterator it(m, c); it; ++it)
        t.emplace_back(off + it.row(), off + c, it.value());
  }
  return LinearOperator<Rational>::from_triplets(s.dim(), s.dim(), t);
}

}  // namespace

DSumOps build_dsum_ops(const DSumSpace& space) {
  space.validate();
  DSumOps ops;
  const Index K = space.K;
  ops.T = direct_sum(space, [K](Index l) { return block_T(K, l); });
  ops.T1 = direct_sum(space, [K](Index) { return block_T(K, 0); });
  ops.D = direct_sum(space, [K](Index l) { return block_D(K, l); });
  ops.V = block_V(K);
  std::vector<Triplet<Rational>> t;
  const auto& v = ops.V.matrix();
  for (Index l = 1; l <= space.L; ++l) {
    const int off = static_cast<int>(space.index(l, 0));
    for (int c = 0; c < v.outerSize(); ++c)
      for (SparseMatrix<Rational>::InnerIterator it(v, c); it; ++it)
        t.emplace_back(off + it.row(), c, space.eps_of(l) * it.value());
  }
  ops.R0 = LinearOperator<Rational>::from_triplets(space.dim(), space.dim(), t);
  return ops;
}

bool never_raises_index(const LinearOperator<Rational>& op, const DSumSpace& space) {
  const auto& m = op.matrix();
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix<Rational>::InnerIterator it(m, c); it; ++it) {
      if (it.row() / space.K != c / space.K) return false;
      if (it.row() % space.K > c % space.K) return false;
    }
  return true;
}

bool operators_commute_as(const LinearOperator<Rational>& a, const LinearOperator<Rational>& b,
                          const LinearOperator<Rational>& c, const LinearOperator<Rational>& d) {
  return a * b == c * d;
}

bool check_intertwining(const DSumSpace& space, Index l, Arithmetic mode) {
  if (mode != Arithmetic::exact)
    throw ArithmeticModeError("the intertwining identity is checked in exact arithmetic only");
  if (l < 1 || l > space.L) throw ParameterError("block index outside [1, L]");
  const auto D = block_D(space.K, l);
  return operators_commute_as(block_T(space.K, 0), D, D, block_T(space.K, l));
}

bool check_intertwining_full(const DSumSpace&, const DSumOps& ops) {
  return operators_commute_as(ops.T1, ops.D, ops.D, ops.T);
}

CrucialEstimateReport crucial_estimate_check(const DSumSpace& space, const DSumOps& ops,
                                             const Vector<Rational>& x, Index m, Index l,
                                             Index k_lo, Index k_hi) {
  if (x.size() != space.dim()) throw ParameterError("vector does not match the space");
  if (m < 1 || m >= space.K) throw ParameterError("m must lie in [1, K)");
  if (l < 1 || l > space.L) throw ParameterError("l must lie in [1, L]");
  if (k_lo < 1 || k_hi >= space.K || k_lo > k_hi) throw ParameterError("k range must lie in [1, K)");
  if (x(m) == 0) throw ParameterError("x_m(1) must be non-zero");
  for (Index j = 1; j < m; ++j)
    if (x(j) != 0)
      throw ParameterError("x_" + std::to_string(j) + "(1) is non-zero below m = " +
                           std::to_string(m));

  CrucialEstimateReport r;
  r.m = m;
  r.l = l;
  Rational x1 = 0;
  for (Index k = 0; k < space.K; ++k) x1 += abs_value(x(k));
  const Rational xm = abs_value(x(m));
  const Vector<Rational> y = ops.R0.apply(x);
  for (Index k = k_lo; k <= k_hi; ++k) {
    const Rational lead = space.eps_of(l) * x(m) * pow2(-static_cast<int>(m * k));
    const Rational delta = y(space.index(l, k)) / lead - 1;
    const Rational bound = pow2(-static_cast<int>(k)) * x1 / xm;
    r.k.push_back(k);
    r.delta.push_back(delta);
    r.bound.push_back(bound);
    r.max_ratio = std::max(r.max_ratio, abs_value(delta) * pow2(static_cast<int>(k)) * xm / x1);
    if (abs_value(delta) > bound) r.ok = false;
  }
  return r;
}

RBuild build_R(const DSumSpace& space, const DSumOps& ops, const Vector<Rational>& u,
               const Vector<Rational>& v) {
  if (u.size() != space.dim() || v.size() != space.dim())
    throw ParameterError("u and v must match the space");
  if (u(0) == 0) throw ParameterError("u_0(1) must be non-zero");
  const Vector<Rational> w = v - ops.R0.apply(u);
  std::vector<Triplet<Rational>> t;
  for (Index r = 0; r < w.size(); ++r)
    if (w(r) != 0) t.emplace_back(int(r), 0, w(r) / u(0));
  const auto correction = LinearOperator<Rational>::from_triplets(space.dim(), space.dim(), t);
  RBuild b;
  b.R = ops.R0 + correction;
  b.maps_u_to_v = b.R.apply(u) == v;
  b.correction_rank = rank(b.R - ops.R0);
  if (!b.maps_u_to_v) throw ConstructionError("R u != v after construction");
  return b;
}

bool within_envelope(const DSumSpace& space, const Vector<Rational>& v) {
  if (v.size() != space.dim()) throw ParameterError("vector does not match the space");
  for (Index l = 1; l <= space.L; ++l)
    for (Index k = 0; k < space.K; ++k)
      if (abs_value(v(space.index(l, k))) > pow2(-static_cast<int>(l * k))) return false;
  return true;
}

Rational dsum_operator_norm(const LinearOperator<Rational>& op, const DSumSpace& space) {
  if (op.rows() != space.dim() || op.cols() != space.dim())
    throw ParameterError("operator does not match the space");
  const auto L = static_cast<std::size_t>(space.L);
  // col_sum[l][l'] = max over columns c in block l' of the l1 mass landing in block l
  std::vector<std::vector<Rational>> best(L, std::vector<Rational>(L));
  const auto& m = op.matrix();
  for (int c = 0; c < m.outerSize(); ++c) {
    std::vector<Rational> mass(L);
    for (SparseMatrix<Rational>::InnerIterator it(m, c); it; ++it)
      mass[static_cast<std::size_t>(it.row() / space.K)] += abs_value(it.value());
    const auto src = static_cast<std::size_t>(c / space.K);
    for (std::size_t l = 0; l < L; ++l) best[l][src] = std::max(best[l][src], mass[l]);
  }
  Rational norm = 0;
  for (std::size_t l = 0; l < L; ++l) {
    Rational s = 0;
    for (std::size_t src = 0; src < L; ++src) s += best[l][src];
    norm = std::max(norm, s);
  }
  return norm;
}

InvertibilityReport check_invertible_shift(const LinearOperator<Rational>& R,
                                           const DSumSpace& space, const Rational& c) {
  InvertibilityReport r;
  r.c = c;
  r.norm_R = dsum_operator_norm(R, space);
  r.neumann = c > r.norm_R;
  if (r.neumann) {
    r.method = "neumann";
    r.invertible = true;
    return r;
  }
  const auto& m = R.matrix();
  bool reads_block_one = true;
  for (int col = static_cast<int>(space.K); col < m.outerSize() && reads_block_one; ++col)
    if (m.col(col).nonZeros() > 0) reads_block_one = false;
  // block lower triangular [[cI + R_11, 0], [R_21, cI]] reduces to the first block
  const Index n = reads_block_one ? space.K : space.dim();
  DenseMatrix<Rational> a = DenseMatrix<Rational>(m.topLeftCorner(n, n));
  a += c * DenseMatrix<Rational>::Identity(n, n);
  if (n <= kExactDeterminantLimit) {
    r.method = "determinant";
    Rational det = determinant<Rational>(a);
    if (reads_block_one) det *= rational_pow(c, static_cast<int>((space.L - 1) * space.K));
    r.determinant = det;
    r.invertible = det != 0;
    return r;
  }
  r.method = "singular-value";
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  MatL f(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < n; ++k) f(i, k) = a(i, k).convert_to<long double>();
  Eigen::JacobiSVD<MatL> svd(f);
  const auto& sv = svd.singularValues();
  r.sigma_min = sv(n - 1);
  const long double tol = sv(0) * static_cast<long double>(n) * 64 *
                          std::numeric_limits<long double>::epsilon();
  r.invertible = r.sigma_min > tol && (!reads_block_one || c != 0);
  return r;
}

}  // namespace fhclab
