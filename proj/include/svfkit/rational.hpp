#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace svfkit {

/// Arbitrary precision rational. Expression templates are disabled so the type
/// behaves like an ordinary value type inside generic code.
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "p/q", an integer, or an exact decimal such as "-0.125" or "1e-3".
/// Throws InputError on malformed text or a zero denominator.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" (or "p" when q = 1).
std::string to_string(const Rational& r);

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Best rational approximation with denominator at most max_den (continued
/// fractions). Used to promote numerically found structure to exact data.
Rational rationalize(double x, long long max_den);

}  // namespace svfkit
