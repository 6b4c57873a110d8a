#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SparseCore>

#include "fhclab/block_vector.hpp"

namespace fhclab {

template <class Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;

template <class Scalar>
using Triplet = Eigen::Triplet<Scalar, int>;

/// Finite-dimensional operator backed by a column-major sparse matrix.
template <class Scalar>
class LinearOperator {
 public:
  LinearOperator() = default;
  explicit LinearOperator(SparseMatrix<Scalar> m) : m_(std::move(m)) { drop_zeros(); }

  static LinearOperator from_triplets(Index rows, Index cols,
                                      const std::vector<Triplet<Scalar>>& entries) {
    SparseMatrix<Scalar> m(static_cast<int>(rows), static_cast<int>(cols));
    m.setFromTriplets(entries.begin(), entries.end());
    return LinearOperator(std::move(m));
  }
  static LinearOperator identity(Index n) {
    SparseMatrix<Scalar> m(static_cast<int>(n), static_cast<int>(n));
    m.setIdentity();
    return LinearOperator(std::move(m));
  }
  static LinearOperator zero(Index rows, Index cols) {
    return LinearOperator(SparseMatrix<Scalar>(static_cast<int>(rows), static_cast<int>(cols)));
  }
  static LinearOperator from_dense(const DenseMatrix<Scalar>& d) {
    std::vector<Triplet<Scalar>> t;
    for (Index c = 0; c < d.cols(); ++c)
      for (Index r = 0; r < d.rows(); ++r)
        if (d(r, c) != Scalar(0)) t.emplace_back(int(r), int(c), d(r, c));
    return from_triplets(d.rows(), d.cols(), t);
  }

  Index rows() const { return m_.rows(); }
  Index cols() const { return m_.cols(); }
  Index nonzeros() const { return m_.nonZeros(); }
  const SparseMatrix<Scalar>& matrix() const { return m_; }
  DenseMatrix<Scalar> dense() const { return DenseMatrix<Scalar>(m_); }

  Scalar coeff(Index r, Index c) const { return m_.coeff(int(r), int(c)); }

  /// Column c as a dense vector (the image of the c-th basis vector).
  Vector<Scalar> column(Index c) const { return Vector<Scalar>(m_.col(int(c))); }

  Vector<Scalar> apply(const Vector<Scalar>& x) const {
    if (x.size() != m_.cols())
      throw ParameterError("operator has " + std::to_string(m_.cols()) +
                           " columns, vector has length " + std::to_string(x.size()));
    Vector<Scalar> y = Vector<Scalar>::Zero(m_.rows());
    for (int c = 0; c < m_.outerSize(); ++c) {
      if (x(c) == Scalar(0)) continue;
      for (typename SparseMatrix<Scalar>::InnerIterator it(m_, c); it; ++it)
        y(it.row()) += it.value() * x(c);
    }
    return y;
  }

  BlockVector<Scalar> apply(const BlockVector<Scalar>& x) const {
    return BlockVector<Scalar>(apply(x.coords), x.norm_tag);
  }

  /// T^j x by repeated application.
  Vector<Scalar> power_apply(Vector<Scalar> x, Index j) const {
    for (Index i = 0; i < j; ++i) x = apply(x);
    return x;
  }

  /// Max column l1 sum: the l1 -> l1 operator norm.
  Scalar column_sum_norm() const {
    Scalar best(0);
    for (int c = 0; c < m_.outerSize(); ++c) {
      Scalar s(0);
      for (typename SparseMatrix<Scalar>::InnerIterator it(m_, c); it; ++it)
        s += abs_value(it.value());
      best = std::max(best, s);
    }
    return best;
  }

  LinearOperator transpose() const { return LinearOperator(SparseMatrix<Scalar>(m_.transpose())); }

  friend LinearOperator operator*(const LinearOperator& a, const LinearOperator& b) {
    if (a.cols() != b.rows()) throw ParameterError("operator composition size mismatch");
    return LinearOperator(SparseMatrix<Scalar>(a.m_ * b.m_));
  }
  friend LinearOperator operator+(const LinearOperator& a, const LinearOperator& b) {
    check_same_shape(a, b);
    return LinearOperator(SparseMatrix<Scalar>(a.m_ + b.m_));
  }
  friend LinearOperator operator-(const LinearOperator& a, const LinearOperator& b) {
    check_same_shape(a, b);
    return LinearOperator(SparseMatrix<Scalar>(a.m_ - b.m_));
  }
  friend LinearOperator operator*(const Scalar& s, const LinearOperator& a) {
    return LinearOperator(SparseMatrix<Scalar>(a.m_ * s));
  }

  /// Entrywise equality; exact in rational mode.
  friend bool operator==(const LinearOperator& a, const LinearOperator& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return (a - b).nonzeros() == 0;
  }

 private:
  static void check_same_shape(const LinearOperator& a, const LinearOperator& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ParameterError("operator shapes differ");
  }
  void drop_zeros() {
    m_.prune([](const int&, const int&, const Scalar& v) { return v != Scalar(0); });
    m_.makeCompressed();
  }

  SparseMatrix<Scalar> m_;
};

/// Rank by Gaussian elimination. Exact for rationals; float mode uses a relative pivot tolerance.
template <class Scalar>
Index matrix_rank(DenseMatrix<Scalar> a) {
  if constexpr (is_exact_v<Scalar>) {
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
      ++rank;
    }
    return rank;
  } else {
    Eigen::FullPivLU<DenseMatrix<Scalar>> lu(a);
    return lu.rank();
  }
}

template <class Scalar>
Index rank(const LinearOperator<Scalar>& op) {
  return matrix_rank<Scalar>(op.dense());
}

/// Determinant; exact for rationals (fraction-keeping elimination).
template <class Scalar>
Scalar determinant(DenseMatrix<Scalar> a) {
  if (a.rows() != a.cols()) throw ParameterError("determinant of a non-square matrix");
  if constexpr (is_exact_v<Scalar>) {
    Rational det = 1;
    const Index n = a.rows();
    for (Index c = 0; c < n; ++c) {
      Index pivot = -1;
      for (Index r = c; r < n; ++r)
        if (a(r, c) != 0) {
          pivot = r;
          break;
        }
      if (pivot < 0) return Rational(0);
      if (pivot != c) {
        a.row(pivot).swap(a.row(c));
        det = -det;
      }
      det *= a(c, c);
      for (Index r = c + 1; r < n; ++r) {
        if (a(r, c) == 0) continue;
        Rational f = a(r, c) / a(c, c);
        for (Index k = c; k < n; ++k) a(r, k) -= f * a(c, k);
      }
    }
    return det;
  } else {
    return a.fullPivLu().determinant();
  }
}

template <class To>
LinearOperator<To> cast_operator(const LinearOperator<Rational>& op) {
  std::vector<Triplet<To>> t;
  const auto& m = op.matrix();
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix<Rational>::InnerIterator it(m, c); it; ++it)
      t.emplace_back(it.row(), it.col(), scalar_cast<To>(it.value()));
  return LinearOperator<To>::from_triplets(op.rows(), op.cols(), t);
}

/// Splits a dyadic rational q = numerator / 2^k. Throws for non-dyadic values.
std::pair<Integer, int> dyadic_parts(const Rational& q);

// Coordinate-list export "row,col,numerator,log2denominator"; every entry must be dyadic.
void write_operator_csv(std::ostream& out, const LinearOperator<Rational>& op);

}  // namespace fhclab
