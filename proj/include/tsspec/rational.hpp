#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace tss {

/// Arbitrary precision rational; used wherever arithmetic must be exact.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// Parses "p/q", an integer, or a decimal literal ("-0.125", "3e-2") exactly.
/// Throws ParseError on anything else.
Rational parse_rational(std::string_view text);

/// "p/q", or "p" when the denominator is one.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

/// Exact value of a finite double (every double is a dyadic rational).
Rational exact_rational(double value);

/// Best rational approximation with denominator <= max_denominator
/// (continued-fraction convergents and semiconvergents).
Rational rationalize(double value, const Integer& max_denominator);

/// The rational with the smallest denominator inside the closed interval
/// [lo, hi] (Stern-Brocot descent).  Requires lo <= hi.
Rational simplest_between(const Rational& lo, const Rational& hi);

inline int sign(const Rational& value) { return value.sign(); }

} // namespace tss
