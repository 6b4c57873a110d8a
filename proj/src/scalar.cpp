#include "fhclab/scalar.hpp"

#include <cctype>

namespace fhclab {

namespace {

Integer floor_div(const Integer& num, const Integer& den) {
  // den > 0 for canonical gmp rationals
  Integer q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

Index checked_index(const Integer& v) {
  if (v > Integer(std::numeric_limits<Index>::max()) ||
      v < Integer(std::numeric_limits<Index>::min())) {
    throw ParameterError("rational value out of 64-bit integer range");
  }
  return v.convert_to<Index>();
}

}  // namespace

Index floor_int(const Rational& q) {
  return checked_index(floor_div(boost::multiprecision::numerator(q),
                                 boost::multiprecision::denominator(q)));
}

Index ceil_int(const Rational& q) {
  return -floor_int(-q);
}

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ParameterError("empty rational literal");
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    try {
      return Rational(s);
    } catch (const std::exception&) {
      throw ParameterError("malformed rational literal '" + text + "'");
    }
  }
  bool neg = s[0] == '-';
  std::string body = (s[0] == '-' || s[0] == '+') ? s.substr(1) : s;
  dot = body.find('.');
  std::string whole = body.substr(0, dot);
  std::string frac = body.substr(dot + 1);
  if (whole.empty()) whole = "0";
  for (char c : whole + frac)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ParameterError("malformed rational literal '" + text + "'");
  Integer scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  Integer num(whole + (frac.empty() ? std::string() : frac));
  Rational r(num, scale);
  return neg ? -r : r;
}

int dyadic_exponent(const Rational& q) {
  Integer den = boost::multiprecision::denominator(q);
  int k = 0;
  while (den > 1) {
    if (boost::multiprecision::bit_test(den, 0)) return -1;
    den >>= 1;
    ++k;
  }
  return k;
}

std::size_t rational_bits(const Rational& q) {
  auto bits = [](Integer v) -> std::size_t {
    if (v < 0) v = -v;
    if (v == 0) return 0;
    return boost::multiprecision::msb(v) + 1;
  };
  return bits(boost::multiprecision::numerator(q)) + bits(boost::multiprecision::denominator(q));
}

std::string to_string(const Rational& q) {
  return q.str();
}

}  // namespace fhclab
