#include "mathforge/numeric.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "mathforge/text.hpp"

namespace mathforge {
namespace {

BigInt pow10(std::uint32_t n) {
  BigInt r = 1;
  for (std::uint32_t i = 0; i < n; ++i) r *= 10;
  return r;
}

BigRational abs_value(const BigRational& r) { return r < 0 ? BigRational(-r) : r; }

}  // namespace

std::string Decimal::to_string() const {
  const bool negative = significand < 0;
  const std::string digits = (negative ? BigInt(-significand) : significand).str();
  std::string out = negative ? "-" : "";
  if (scale <= 0) {
    out += digits;
    if (scale < 0) out += "e" + std::to_string(-scale);
    return out;
  }
  const auto s = static_cast<std::size_t>(scale);
  if (digits.size() <= s) {
    out += "0." + std::string(s - digits.size(), '0') + digits;
  } else {
    out += digits.substr(0, digits.size() - s) + "." + digits.substr(digits.size() - s);
  }
  return out;
}

Decimal Decimal::parse(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  std::int64_t frac = 0;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (text::is_ascii_digit(c)) {
      digits.push_back(c);
      if (seen_point) ++frac;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (digits.empty()) throw std::invalid_argument("decimal: no digits in '" + std::string(text) + "'");
  std::int64_t exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    const std::string exp_text(text.substr(i));
    std::size_t used = 0;
    try {
      exponent = std::stoll(exp_text, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("decimal: bad exponent in '" + std::string(text) + "'");
    }
    i += used;
  }
  if (i != text.size()) throw std::invalid_argument("decimal: trailing characters in '" + std::string(text) + "'");
  Decimal d;
  d.significand = parse_digits(digits);
  if (negative) d.significand = -d.significand;
  const std::int64_t scale = frac - exponent;
  if (scale > INT32_MAX || scale < INT32_MIN) throw std::invalid_argument("decimal: scale out of range");
  d.scale = static_cast<std::int32_t>(scale);
  return d;
}

Decimal Decimal::from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("decimal: non-finite value");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return parse(buf);
}

BigRational Decimal::to_rational() const {
  if (scale >= 0) return BigRational(significand, pow10(static_cast<std::uint32_t>(scale)));
  return BigRational(significand * pow10(static_cast<std::uint32_t>(-scale)));
}

std::optional<BigRational> NumericValue::exact() const {
  if (is_rational()) return rational();
  if (is_decimal()) return decimal().to_rational();
  return std::nullopt;
}

double NumericValue::to_double() const {
  if (is_rational()) return rational().convert_to<double>();
  if (is_decimal()) return decimal().to_rational().convert_to<double>();
  return std::nan("");
}

std::string NumericValue::to_string() const {
  if (is_rational()) return format_rational(rational());
  if (is_decimal()) return decimal().to_string();
  return token().text;
}

std::string normalize_token(std::string_view text) {
  std::string out;
  for (char c : text::to_lower_ascii(text)) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') out.push_back(c);
  }
  return out;
}

BigInt parse_digits(std::string_view digits) {
  BigInt r = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') throw std::invalid_argument("not a digit string: '" + std::string(digits) + "'");
    r = r * 10 + (c - '0');
  }
  return r;
}

std::size_t bit_size(const BigRational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  const std::size_t nb = num == 0 ? 0 : boost::multiprecision::msb(num < 0 ? BigInt(-num) : num) + 1;
  const std::size_t db = boost::multiprecision::msb(den) + 1;
  return std::max(nb, db);
}

BigRational exact_from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("exact_from_double: non-finite value");
  if (v == 0.0) return BigRational(0);
  int exp = 0;
  const double mant = std::frexp(v, &exp);  // v = mant * 2^exp, 0.5 <= |mant| < 1
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  BigRational r(scaled);
  exp -= 53;
  BigInt two_pow = 1;
  two_pow <<= static_cast<unsigned>(exp < 0 ? -exp : exp);
  if (exp < 0) return r / BigRational(two_pow);
  return r * BigRational(two_pow);
}

std::string format_rational(const BigRational& r) {
  BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return r.str();
  unsigned twos = 0;
  unsigned fives = 0;
  while (den % 2 == 0) { den /= 2; ++twos; }
  while (den % 5 == 0) { den /= 5; ++fives; }
  if (den != 1) return r.str();
  const unsigned places = std::max(twos, fives);
  const BigRational scaled = r * BigRational(pow10(places));
  Decimal d{boost::multiprecision::numerator(scaled), static_cast<std::int32_t>(places)};
  return d.to_string();
}

bool numeric_equal(const NumericValue& a, const NumericValue& b, const TolerancePolicy& tol) {
  if (a.is_token() || b.is_token()) {
    if (!(a.is_token() && b.is_token())) return false;
    return normalize_token(a.token().text) == normalize_token(b.token().text);
  }
  if (a.is_rational() && b.is_rational()) return a.rational() == b.rational();
  const BigRational x = *a.exact();
  const BigRational y = *b.exact();
  const BigRational diff = abs_value(x - y);
  const BigRational magnitude = std::max(abs_value(x), abs_value(y));
  const BigRational bound = std::max(exact_from_double(tol.abs_tol),
                                     exact_from_double(tol.rel_tol) * magnitude);
  return diff <= bound;
}

}  // namespace mathforge
