#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "fhclab/scalar.hpp"

namespace fhclab {

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Which norm a BlockVector is measured in.
struct NormTag {
  enum class Kind { sup, ellp, c0_sum_of_ell1 };
  Kind kind = Kind::sup;
  int p = 1;            // ellp exponent
  Index block = 1;      // c0_sum_of_ell1 block length

  static NormTag sup_norm() { return {}; }
  static NormTag ell(int p) {
    if (p < 1) throw ParameterError("ell_p exponent must be >= 1");
    return {Kind::ellp, p, 1};
  }
  static NormTag c0_sum_of_ell1(Index block_length) {
    if (block_length < 1) throw ParameterError("block length must be positive");
    return {Kind::c0_sum_of_ell1, 1, block_length};
  }

  std::string describe() const {
    switch (kind) {
      case Kind::sup:
        return "sup";
      case Kind::ellp:
        return "ell" + std::to_string(p);
      case Kind::c0_sum_of_ell1:
        return "c0(ell1 blocks of " + std::to_string(block) + ")";
    }
    return "?";
  }
  friend bool operator==(const NormTag&, const NormTag&) = default;
};

/// Finite coordinate vector together with the norm it lives in.
template <class Scalar>
struct BlockVector {
  Vector<Scalar> coords;
  NormTag norm_tag;

  BlockVector() = default;
  BlockVector(Vector<Scalar> c, NormTag tag) : coords(std::move(c)), norm_tag(tag) {
    check_shape();
  }

  static BlockVector zero(Index dim, NormTag tag) {
    return BlockVector(Vector<Scalar>::Zero(dim), tag);
  }
  static BlockVector basis(Index dim, Index k, NormTag tag) {
    if (k < 0 || k >= dim) throw ParameterError("basis index out of range");
    Vector<Scalar> c = Vector<Scalar>::Zero(dim);
    c(k) = Scalar(1);
    return BlockVector(std::move(c), tag);
  }

  Index dim() const { return static_cast<Index>(coords.size()); }

  void check_shape() const {
    if (norm_tag.kind == NormTag::Kind::c0_sum_of_ell1 && coords.size() % norm_tag.block != 0)
      throw ParameterError("c0-sum vector length " + std::to_string(coords.size()) +
                           " is not a multiple of block length " +
                           std::to_string(norm_tag.block));
  }
};

namespace detail {

template <class Scalar>
Scalar ell1(const Eigen::Ref<const Vector<Scalar>>& v) {
  Scalar s(0);
  for (Index i = 0; i < v.size(); ++i) s += abs_value(v(i));
  return s;
}

template <class Scalar>
Scalar sup(const Eigen::Ref<const Vector<Scalar>>& v) {
  Scalar s(0);
  for (Index i = 0; i < v.size(); ++i) s = std::max(s, abs_value(v(i)));
  return s;
}

template <class Scalar>
Scalar max_block_ell1(const Vector<Scalar>& v, Index block) {
  Scalar best(0);
  for (Index start = 0; start < v.size(); start += block) {
    Vector<Scalar> seg = v.segment(start, block);
    best = std::max(best, ell1<Scalar>(seg));
  }
  return best;
}

// sum |v_i|^p, exact in rational mode
template <class Scalar>
Scalar ellp_power(const Vector<Scalar>& v, int p) {
  Scalar s(0);
  for (Index i = 0; i < v.size(); ++i) {
    Scalar a = abs_value(v(i));
    Scalar t(1);
    for (int j = 0; j < p; ++j) t *= a;
    s += t;
  }
  return s;
}

}  // namespace detail

/// Norm of raw coordinates under a tag. ell_p with p > 1 is only available in float mode.
template <class Scalar>
Scalar norm(const Vector<Scalar>& v, const NormTag& tag) {
  switch (tag.kind) {
    case NormTag::Kind::sup:
      return detail::sup<Scalar>(v);
    case NormTag::Kind::c0_sum_of_ell1:
      return detail::max_block_ell1<Scalar>(v, tag.block);
    case NormTag::Kind::ellp:
      if (tag.p == 1) return detail::ell1<Scalar>(v);
      if constexpr (is_exact_v<Scalar>) {
        throw ArithmeticModeError("ell" + std::to_string(tag.p) +
                                  " norm is irrational in exact mode; use norm_less_than or "
                                  "float mode");
      } else {
        return std::pow(detail::ellp_power<Scalar>(v, tag.p), Scalar(1) / Scalar(tag.p));
      }
  }
  throw ParameterError("unknown norm tag");
}

template <class Scalar>
Scalar norm(const BlockVector<Scalar>& x) {
  return norm<Scalar>(x.coords, x.norm_tag);
}

/// ||v|| < radius, decided exactly in rational mode (ell_p compared via p-th powers).
template <class Scalar>
bool norm_less_than(const Vector<Scalar>& v, const NormTag& tag, const Scalar& radius) {
  if (tag.kind == NormTag::Kind::ellp && tag.p > 1) {
    Scalar rp(1);
    for (int j = 0; j < tag.p; ++j) rp *= radius;
    return detail::ellp_power<Scalar>(v, tag.p) < rp;
  }
  return norm<Scalar>(v, tag) < radius;
}

template <class Scalar>
Scalar distance(const BlockVector<Scalar>& x, const BlockVector<Scalar>& y) {
  if (x.dim() != y.dim()) throw ParameterError("dimension mismatch in distance");
  Vector<Scalar> d = x.coords - y.coords;
  return norm<Scalar>(d, x.norm_tag);
}

template <class To, class From>
Vector<To> cast_vector(const Vector<From>& v) {
  Vector<To> out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    if constexpr (std::is_same_v<From, Rational>) {
      out(i) = scalar_cast<To>(v(i));
    } else {
      out(i) = static_cast<To>(v(i));
    }
  }
  return out;
}

// CSV "l,k,numerator,log2denominator" with 1-based block l and in-block coordinate k.
// Zero coordinates are omitted; entries must be dyadic.
void write_block_vector_csv(std::ostream& out, const BlockVector<Rational>& x);

}  // namespace fhclab
