#include "sleepd/rational.hpp"

#include <cctype>
#include <cstdlib>
#include <numeric>

namespace sleepd {

namespace {

bool mul_overflow(std::int64_t a, std::int64_t b, std::int64_t* out) {
  return __builtin_mul_overflow(a, b, out);
}

bool add_digit(std::int64_t* value, char digit) {
  std::int64_t v = *value;
  if (mul_overflow(v, 10, &v)) return false;
  if (__builtin_add_overflow(v, digit - '0', &v)) return false;
  *value = v;
  return true;
}

}  // namespace

Rational normalize(std::int64_t num, std::int64_t den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num == 0) den = 1;
  return Rational{num, den};
}

std::optional<Rational> Rational::parse(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
    return std::nullopt;

  std::int64_t integer_part = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      if (!add_digit(&integer_part, c)) return std::nullopt;
      ++i;
    } else if (c == ',') {
      // Thousands separator: must be followed by exactly three digits and
      // then a non-digit (or another separator / end).
      for (std::size_t j = i + 1; j <= i + 3; ++j) {
        if (j >= text.size() ||
            !std::isdigit(static_cast<unsigned char>(text[j])))
          return std::nullopt;
      }
      if (i + 4 < text.size() &&
          std::isdigit(static_cast<unsigned char>(text[i + 4])))
        return std::nullopt;
      ++i;  // consume the comma; digits handled by the loop
    } else {
      break;
    }
  }

  std::int64_t num = integer_part;
  std::int64_t den = 1;
  if (i < text.size() && text[i] == '.') {
    ++i;
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
      return std::nullopt;
    while (i < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (!add_digit(&num, text[i])) return std::nullopt;
      if (mul_overflow(den, 10, &den)) return std::nullopt;
      ++i;
    }
  }
  if (i != text.size()) return std::nullopt;
  if (negative) num = -num;
  return normalize(num, den);
}

std::string Rational::to_string() const {
  if (den == 1) return std::to_string(num);
  // Expand 2^a * 5^b denominators to an exact decimal.
  std::int64_t d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return std::to_string(num) + "/" + std::to_string(den);

  int digits = twos > fives ? twos : fives;
  std::int64_t scale = 1;
  std::int64_t mantissa = num < 0 ? -num : num;
  bool ok = true;
  for (int k = 0; k < digits; ++k) ok = ok && !mul_overflow(scale, 10, &scale);
  std::int64_t scaled = 0;
  ok = ok && !mul_overflow(mantissa, scale / den, &scaled);
  if (!ok) return std::to_string(num) + "/" + std::to_string(den);

  std::string body = std::to_string(scaled);
  if (static_cast<int>(body.size()) <= digits)
    body.insert(0, digits + 1 - body.size(), '0');
  body.insert(body.size() - digits, ".");
  if (num < 0) body.insert(0, "-");
  return body;
}

}  // namespace sleepd
