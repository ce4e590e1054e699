#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sleepd {

// Exact rational value for grading numeric answers. GSM/AIME answers are
// integers, but extracted text may carry signs, thousands separators, or a
// decimal point, so parsing keeps exactness instead of rounding through
// double. Always stored normalized: den > 0, gcd(|num|, den) == 1.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational from_int(std::int64_t v) { return Rational{v, 1}; }

  // Parses "[+-]digits[,ddd]*[.digits]". Commas are accepted only as
  // three-digit group separators. Returns nullopt on anything else or on
  // 64-bit overflow.
  static std::optional<Rational> parse(std::string_view text);

  bool is_integer() const { return den == 1; }

  // Canonical text form: plain integer when den == 1, otherwise the exact
  // decimal expansion (den is always 2^a * 5^b for parsed values); falls back
  // to "num/den" for other denominators.
  std::string to_string() const;

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) {
    return !(a == b);
  }
};

Rational normalize(std::int64_t num, std::int64_t den);

}  // namespace sleepd
