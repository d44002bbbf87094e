#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <vector>

namespace psamp {

// Exact arithmetic throughout the enumeration layer. cpp_rational keeps
// values reduced to lowest terms with a positive denominator.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// "p/q" when q != 1, plain integer otherwise.
std::string format_rational(const Rational& r);

// Accepts "p/q", plain integers, and decimal literals ("0.25"); decimals are
// read exactly. Throws Error on malformed input.
Rational parse_rational(const std::string& text);

// Best rational with denominator <= max_denominator, accepted only when it
// matches x to within 1e-15 (tight enough that double round-off passes while
// genuinely irrational values are refused). Intended for probabilities.
std::optional<Rational> exactify(double x, long max_denominator = 1000000);

double rational_to_double(const Rational& r);

// All-or-nothing exactification of a vector of probabilities.
std::optional<std::vector<Rational>> exactify_all(const std::vector<double>& xs,
                                                  long max_denominator = 1000000);

}  // namespace psamp
