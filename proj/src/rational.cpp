#include "svfkit/rational.hpp"

#include "svfkit/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>

namespace svfkit {

namespace {

BigInt parse_integer(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw InputError("malformed number '" + std::string(whole) + "'");
  BigInt value = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw InputError("malformed number '" + std::string(whole) + "'");
    value = value * 10 + (c - '0');
  }
  return value;
}

Rational parse_decimal(std::string_view text, std::string_view whole) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  long long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = text.substr(e + 1);
    bool exp_negative = false;
    if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
      exp_negative = exp_text.front() == '-';
      exp_text.remove_prefix(1);
    }
    if (exp_text.empty() || exp_text.size() > 6)
      throw InputError("malformed exponent in '" + std::string(whole) + "'");
    exponent = static_cast<long long>(parse_integer(exp_text, whole));
    if (exp_negative) exponent = -exponent;
    text = text.substr(0, e);
  }
  std::string digits;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    digits = std::string(text.substr(0, dot)) + std::string(text.substr(dot + 1));
    exponent -= static_cast<long long>(text.size() - dot - 1);
  } else {
    digits = std::string(text);
  }
  BigInt mantissa = parse_integer(digits, whole);
  BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::llabs(exponent)));
  Rational r = exponent >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
  return negative ? Rational(-r) : r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view whole = text;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw InputError("empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash), whole);
    Rational den = parse_decimal(text.substr(slash + 1), whole);
    if (den == 0) throw InputError("zero denominator in '" + std::string(whole) + "'");
    return num / den;
  }
  return parse_decimal(text, whole);
}

std::string to_string(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational rationalize(double x, long long max_den) {
  if (!std::isfinite(x)) throw InputError("cannot rationalize a non-finite value");
  bool negative = x < 0;
  double rest = std::fabs(x);
  // Convergents h/k of the continued fraction expansion.
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  for (int iter = 0; iter < 64; ++iter) {
    double a = std::floor(rest);
    if (a > 9.0e15) break;
    auto ai = static_cast<long long>(a);
    __int128 h2w = static_cast<__int128>(ai) * h1 + h0;
    __int128 k2w = static_cast<__int128>(ai) * k1 + k0;
    if (k2w > max_den || h2w > static_cast<__int128>(INT64_MAX)) break;
    auto h2 = static_cast<long long>(h2w);
    auto k2 = static_cast<long long>(k2w);
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    double frac = rest - a;
    if (frac < 1e-15) break;
    rest = 1.0 / frac;
  }
  if (k1 == 0) return Rational(0);
  Rational r{BigInt(h1), BigInt(k1)};
  return negative ? Rational(-r) : r;
}

}  // namespace svfkit
