#include "psamp/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "psamp/errors.hpp"

namespace psamp {

std::string format_rational(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

[[noreturn]] void bad_literal(const std::string& text) {
  throw Error("BadRationalLiteral", "cannot parse rational literal: \"" + text + "\"");
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s = text;
  // trim
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (s.empty()) bad_literal(text);

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.erase(s.begin());
  }

  Rational value;
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string p = s.substr(0, slash);
    std::string q = s.substr(slash + 1);
    if (!all_digits(p) || !all_digits(q)) bad_literal(text);
    BigInt den(q);
    if (den == 0) bad_literal(text);
    value = Rational(BigInt(p), den);
  } else if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (!all_digits(whole) || (!frac.empty() && !all_digits(frac))) bad_literal(text);
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    value = Rational(BigInt(whole) * scale + (frac.empty() ? BigInt(0) : BigInt(frac)), scale);
  } else {
    if (!all_digits(s)) bad_literal(text);
    value = Rational(BigInt(s));
  }
  if (negative) value = -value;
  return value;
}

std::optional<Rational> exactify(double x, long max_denominator) {
  if (!std::isfinite(x)) return std::nullopt;
  const bool negative = x < 0;
  const double target = std::fabs(x);

  // Continued-fraction convergents of target, capped at max_denominator.
  long long h_prev = 1, k_prev = 0;  // h_{-1}/k_{-1}
  long long h = 0, k = 1;            // running convergent, seeded for a0 below
  double v = target;
  long long best_h = 0, best_k = 1;
  bool first = true;
  for (int iter = 0; iter < 64; ++iter) {
    const double fa = std::floor(v);
    if (fa > 9e17) break;
    const long long a = static_cast<long long>(fa);
    const long long h_next = (first ? a : a * h + h_prev);
    const long long k_next = (first ? 1 : a * k + k_prev);
    if (!first) {
      h_prev = h;
      k_prev = k;
    }
    h = h_next;
    k = k_next;
    first = false;
    if (k > max_denominator) break;  // previous convergent is the best under the cap
    best_h = h;
    best_k = k;
    const double rem = v - fa;
    if (rem < 1e-18) break;
    v = 1.0 / rem;
  }
  if (best_k == 0) return std::nullopt;
  const double approx = static_cast<double>(best_h) / static_cast<double>(best_k);
  if (std::fabs(approx - target) > 1e-15) return std::nullopt;
  Rational r{BigInt(best_h), BigInt(best_k)};
  return negative ? Rational(-r) : r;
}

double rational_to_double(const Rational& r) { return r.convert_to<double>(); }

std::optional<std::vector<Rational>> exactify_all(const std::vector<double>& xs,
                                                  long max_denominator) {
  std::vector<Rational> out;
  out.reserve(xs.size());
  for (double x : xs) {
    auto r = exactify(x, max_denominator);
    if (!r) return std::nullopt;
    out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace psamp
