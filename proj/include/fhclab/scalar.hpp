#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "fhclab/errors.hpp"

namespace fhclab {

using Index = std::int64_t;

// Exact mode. Expression templates are off so the type composes with Eigen.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;

// Float mode. Extended precision: orbits of 2B reach coordinates of size 2^-n with
// n in the tens of thousands, which is below the range of double.
using Real = long double;

enum class Arithmetic { exact, floating };

template <class Scalar>
inline constexpr bool is_exact_v = std::is_same_v<Scalar, Rational>;

template <class Scalar>
Scalar abs_value(const Scalar& x) {
  if constexpr (is_exact_v<Scalar>) {
    return boost::multiprecision::abs(x);
  } else {
    return std::fabs(x);
  }
}

/// 2^e as an exact rational.
inline Rational pow2(int e) {
  Integer one = 1;
  if (e >= 0) return Rational(Integer(one << e));
  return Rational(one, Integer(one << (-e)));
}

inline Rational rational_pow(const Rational& base, int e) {
  Rational r = 1;
  Rational b = e >= 0 ? base : Rational(1) / base;
  for (int i = 0; i < (e >= 0 ? e : -e); ++i) r *= b;
  return r;
}

template <class To>
To scalar_cast(const Rational& q) {
  if constexpr (std::is_same_v<To, Rational>) {
    return q;
  } else {
    return q.template convert_to<To>();
  }
}

template <class Scalar>
long double to_real(const Scalar& x) {
  if constexpr (is_exact_v<Scalar>) {
    return x.template convert_to<long double>();
  } else {
    return static_cast<long double>(x);
  }
}

/// floor / ceil of an exact rational, as a 64-bit integer.
Index floor_int(const Rational& q);
Index ceil_int(const Rational& q);

/// Parses "3", "-1/8", "0.125" into an exact rational.
Rational parse_rational(const std::string& text);

/// If q = n / 2^k with k >= 0 (n integer), returns k; otherwise -1.
int dyadic_exponent(const Rational& q);

/// Bit size of numerator plus denominator; used for exact-mode growth guards.
std::size_t rational_bits(const Rational& q);

std::string to_string(const Rational& q);

}  // namespace fhclab
