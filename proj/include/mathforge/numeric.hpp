#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <boost/multiprecision/cpp_int.hpp>

namespace mathforge {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Numerators and denominators wider than this raise Overflow during
/// evaluation instead of growing without bound.
inline constexpr unsigned kRationalBitCap = 4096;

/// Inexact (floating-origin) value kept as significand * 10^-scale so its
/// textual form round-trips exactly.
struct Decimal {
  BigInt significand;
  std::int32_t scale = 0;

  std::string to_string() const;
  /// Accepts "-12.50", "3", "1.25e-7". Throws std::invalid_argument.
  static Decimal parse(std::string_view text);
  static Decimal from_double(double v);
  BigRational to_rational() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;
};

/// A verbatim answer that is not a number (e.g. a symbolic expression).
struct NonNumericToken {
  std::string text;
  friend bool operator==(const NonNumericToken&, const NonNumericToken&) = default;
};

class NumericValue {
 public:
  NumericValue() : v_(BigRational(0)) {}
  NumericValue(BigRational r) : v_(std::move(r)) {}  // NOLINT(google-explicit-constructor)
  NumericValue(Decimal d) : v_(std::move(d)) {}      // NOLINT(google-explicit-constructor)
  NumericValue(NonNumericToken t) : v_(std::move(t)) {}  // NOLINT(google-explicit-constructor)

  static NumericValue integer(long long v) { return NumericValue(BigRational(v)); }

  bool is_rational() const { return std::holds_alternative<BigRational>(v_); }
  bool is_decimal() const { return std::holds_alternative<Decimal>(v_); }
  bool is_token() const { return std::holds_alternative<NonNumericToken>(v_); }

  const BigRational& rational() const { return std::get<BigRational>(v_); }
  const Decimal& decimal() const { return std::get<Decimal>(v_); }
  const NonNumericToken& token() const { return std::get<NonNumericToken>(v_); }

  /// Exact rational view of a numeric value; nullopt for tokens.
  std::optional<BigRational> exact() const;
  double to_double() const;

  /// "p/q" or "p" for rationals, decimal text for decimals, verbatim token.
  std::string to_string() const;

  friend bool operator==(const NumericValue&, const NumericValue&) = default;

 private:
  std::variant<BigRational, Decimal, NonNumericToken> v_;
};

/// Numeric comparison settings. Two rationals always compare exactly; any
/// other numeric pair passes when |a-b| <= max(abs_tol, rel_tol*max(|a|,|b|)).
struct TolerancePolicy {
  double abs_tol = 1e-6;
  double rel_tol = 1e-6;
};

bool numeric_equal(const NumericValue& a, const NumericValue& b,
                   const TolerancePolicy& tol = {});

/// Lower-cased with all whitespace removed; used for token comparison.
std::string normalize_token(std::string_view text);

/// Larger of the numerator and denominator bit widths.
/// Parses a run of ASCII decimal digits. cpp_int's own string constructor
/// reads a leading 0 as octal, so never feed it raw digit strings.
BigInt parse_digits(std::string_view digits);

std::size_t bit_size(const BigRational& r);

/// Exact dyadic value of a finite double.
BigRational exact_from_double(double v);

/// Terminating rationals print as plain decimals ("0.5024"), others as "p/q".
std::string format_rational(const BigRational& r);

}  // namespace mathforge
