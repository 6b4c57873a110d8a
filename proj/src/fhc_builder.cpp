#include "fhclab/fhc_builder.hpp"

#include <cmath>

namespace fhclab {
namespace detail {

std::vector<Rational> fhcc_epsilons(const std::vector<Rational>& alpha) {
  std::vector<Rational> eps;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const int p = static_cast<int>(i + 1);
    eps.push_back(std::min(alpha[i], pow2(-p)) / (2 * (p + 1)));
  }
  return eps;
}

std::vector<Index> fhcc_thresholds(const std::vector<Rational>& target_norms,
                                   const std::vector<Index>& degree,
                                   const std::vector<Rational>& eps, const Rational& c) {
  const Rational geom = Rational(1) / (1 - Rational(1) / c);
  std::vector<Index> N;
  Rational worst_norm = 0;
  Index worst_deg = 0;
  for (std::size_t p = 0; p < eps.size(); ++p) {
    worst_norm = std::max(worst_norm, target_norms[p]);
    worst_deg = std::max(worst_deg, degree[p]);
    Index n = worst_deg + 1;
    Rational tail = rational_pow(c, -static_cast<int>(n)) * geom * worst_norm;
    while (tail > eps[p]) {
      tail /= c;
      ++n;
    }
    N.push_back(n);
  }
  return N;
}

long double geometric_tail(const Rational& c, Index e) {
  const long double lc = std::log2(to_real(c));
  return std::exp2(-static_cast<long double>(e) * lc) / (1.0L - std::exp2(-lc));
}

Index vector_degree(const Vector<Rational>& v) {
  for (Index k = v.size() - 1; k >= 0; --k)
    if (v(k) != 0) return k;
  return -1;
}

}  // namespace detail

namespace {

// Rows r_1..r_L of Z (dim x L) with Z[rows, :] invertible.
std::vector<Index> independent_rows(const DenseMatrix<Rational>& Z) {
  DenseMatrix<Rational> a = Z.transpose();  // L x dim, pick pivot columns
  std::vector<Index> rows;
  Index rank = 0;
  for (Index c = 0; c < a.cols() && rank < a.rows(); ++c) {
    Index pivot = -1;
    for (Index r = rank; r < a.rows(); ++r)
      if (a(r, c) != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    a.row(pivot).swap(a.row(rank));
    for (Index r = rank + 1; r < a.rows(); ++r) {
      if (a(r, c) == 0) continue;
      Rational f = a(r, c) / a(rank, c);
      for (Index k = c; k < a.cols(); ++k) a(r, k) -= f * a(rank, k);
    }
    rows.push_back(c);
    ++rank;
  }
  return rows;
}

DenseMatrix<Rational> exact_inverse(DenseMatrix<Rational> a) {
  const Index n = a.rows();
  DenseMatrix<Rational> inv = DenseMatrix<Rational>::Identity(n, n);
  for (Index c = 0; c < n; ++c) {
    Index pivot = c;
    while (pivot < n && a(pivot, c) == 0) ++pivot;
    if (pivot == n) throw RankError("matrix is singular");
    a.row(pivot).swap(a.row(c));
    inv.row(pivot).swap(inv.row(c));
    const Rational d = a(c, c);
    a.row(c) /= d;
    inv.row(c) /= d;
    for (Index r = 0; r < n; ++r) {
      if (r == c || a(r, c) == 0) continue;
      const Rational f = a(r, c);
      a.row(r) -= f * a.row(c);
      inv.row(r) -= f * inv.row(c);
    }
  }
  return inv;
}

}  // namespace

InterpolationResult similarity_interpolation(const LinearOperator<Rational>& S,
                                             const std::vector<Vector<Rational>>& z,
                                             const std::vector<Vector<Rational>>& x,
                                             const Rational& eps) {
  const Index dim = S.rows();
  const auto L = static_cast<Index>(z.size());
  if (S.cols() != dim) throw ParameterError("S must be square");
  if (L == 0 || x.size() != z.size()) throw ParameterError("need matching, non-empty z and x lists");
  for (Index l = 0; l < L; ++l)
    if (z[l].size() != dim || x[l].size() != dim)
      throw ParameterError("pair " + std::to_string(l + 1) + " has the wrong dimension");

  DenseMatrix<Rational> Z(dim, L);
  for (Index l = 0; l < L; ++l) Z.col(l) = z[l];
  if (matrix_rank<Rational>(Z) < L) throw RankError("the z vectors are linearly dependent");

  // Left inverse supported on L independent rows; row l is v_l*.
  const std::vector<Index> rows = independent_rows(Z);
  DenseMatrix<Rational> sub(L, L);
  for (Index i = 0; i < L; ++i) sub.row(i) = Z.row(rows[i]);
  const DenseMatrix<Rational> inv = exact_inverse(sub);

  InterpolationResult r;
  DenseMatrix<Rational> op = S.dense();
  for (Index l = 0; l < L; ++l) {
    Vector<Rational> v = Vector<Rational>::Zero(dim);
    for (Index i = 0; i < L; ++i) v(rows[i]) = inv(l, i);
    for (Index s = 0; s <= l; ++s)
      if (v.dot(z[s]) != (s == l ? 1 : 0)) throw RankError("biorthogonality failed");
    const Vector<Rational> residual = x[l] - op * z[l];
    op += residual * v.transpose();
    const Rational step = detail::sup<Rational>(v) * detail::ell1<Rational>(residual);
    r.steps.push_back(step);
    r.perturbation += step;
    r.functionals.push_back(std::move(v));
  }
  r.op = LinearOperator<Rational>::from_dense(op);
  for (Index l = 0; l < L; ++l)
    if (r.op.apply(z[l]) != x[l])
      throw ConstructionError("interpolation lost L z_" + std::to_string(l + 1) + " = x_" +
                              std::to_string(l + 1));
  r.within_eps = r.perturbation < eps;
  return r;
}

}  // namespace fhclab
