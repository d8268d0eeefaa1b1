#include <gtest/gtest.h>

#include <random>

#include "mathforge/expr.hpp"

using namespace mathforge;
using namespace mathforge::expr;

namespace {

BigRational q(long long n, long long d = 1) { return BigRational(n, d); }

BigRational value_of(const std::string& text) {
  const NumericValue v = eval_expression(parse_expression(text));
  EXPECT_TRUE(v.is_rational()) << text;
  return v.rational();
}

Equation eq(const std::string& lhs, const std::string& rhs) {
  return {parse_expression(lhs), parse_expression(rhs), {}, {}};
}

}  // namespace

TEST(Parse, CalcAnnotationProduct) {
  const auto ast = parse_expression("20*4");
  EXPECT_EQ(ast.root().kind, NodeKind::Binary);
  EXPECT_EQ(ast.root().op, BinaryOp::Mul);
  EXPECT_EQ(ast.node(ast.root().first).literal, "20");
  EXPECT_EQ(ast.node(ast.root().second).literal, "4");
}

TEST(Parse, CurrencyAndThousandsSeparators) {
  const auto ast = parse_expression("$1,350 + $2,100");
  EXPECT_EQ(ast.print(), "1350 + 2100");
  EXPECT_EQ(value_of("$1,350 + $2,100"), q(3450));
}

TEST(Parse, SuperscriptSquareWithUnit) {
  const auto ast = parse_expression("(0.4米)²");
  EXPECT_EQ(ast.root().op, BinaryOp::Pow);
  EXPECT_TRUE(ast.root().superscript);
  EXPECT_EQ(value_of("(0.4米)²"), q(4, 25));
}

TEST(Parse, TimesLetterBetweenOperands) { EXPECT_EQ(value_of("6 x 350"), q(2100)); }

TEST(Parse, RejectsVariablesAndDanglingOperators) {
  EXPECT_THROW(parse_expression("3x + 4"), ParseError);
  EXPECT_THROW(parse_expression("+"), ParseError);
  EXPECT_THROW(parse_expression("(1 + 2"), ParseError);
  EXPECT_THROW(parse_expression(""), ParseError);
}

TEST(Parse, ErrorCarriesPosition) {
  try {
    parse_expression("1 + * 2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(Parse, LeadingZerosAreDecimal) {
  EXPECT_EQ(value_of("0.05"), q(1, 20));
  EXPECT_EQ(value_of("010"), q(10));
}

TEST(Eval, ExactRationals) {
  EXPECT_EQ(value_of("1350 + 2100"), q(3450));
  EXPECT_EQ(value_of("1/3 + 1/6"), q(1, 2));
  EXPECT_EQ(value_of("3.14 * 0.16"), q(5024, 10000));
}

TEST(Eval, Precedence) {
  EXPECT_EQ(value_of("2 + 3 * 4"), q(14));
  EXPECT_EQ(value_of("-2 ^ 2"), q(-4));
  EXPECT_EQ(value_of("2 ^ 3 ^ 2"), q(512));
  EXPECT_EQ(value_of("10 - 4 - 3"), q(3));
  EXPECT_EQ(value_of("2 ^ -1"), q(1, 2));
  EXPECT_EQ(value_of("50%"), q(1, 2));
  EXPECT_EQ(value_of("0 ^ 0"), q(1));
}

TEST(Eval, DivisionByZero) {
  try {
    eval_expression(parse_expression("5/0"));
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalErrorKind::DivisionByZero);
  }
}

TEST(Eval, BitCapOverflow) {
  try {
    eval_expression(parse_expression("10 ^ 5000"));
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalErrorKind::Overflow);
  }
}

TEST(Eval, FractionalPowerLeavesRationals) {
  const NumericValue v = eval_expression(parse_expression("2 ^ 0.5"));
  EXPECT_TRUE(v.is_decimal());
  EXPECT_NEAR(v.to_double(), 1.41421356, 1e-8);
  EXPECT_THROW(eval_expression(parse_expression("(-8) ^ 0.5")), EvalError);
}

TEST(Check, AppendixEquations) {
  EXPECT_EQ(check_equation(eq("1350 + 6×350", "3150")).truth, Truth::False);
  EXPECT_EQ(check_equation(eq("80 − 70", "10")).truth, Truth::True);
  const auto v = check_equation(eq("5/0", "1"));
  EXPECT_EQ(v.truth, Truth::Indeterminate);
  EXPECT_NE(v.reason.find("division"), std::string::npos);
}

TEST(Numeric, EqualityAcrossForms) {
  const TolerancePolicy tol;
  EXPECT_TRUE(numeric_equal(NumericValue(q(10)), NumericValue(Decimal::parse("10.0")), tol));
  EXPECT_TRUE(numeric_equal(NumericValue(Decimal::parse("0.5024")), eval_expression(parse_expression("3.14*0.16")), tol));
  EXPECT_FALSE(numeric_equal(NumericValue(q(200)), NumericValue(q(100)), tol));
  EXPECT_FALSE(numeric_equal(NumericValue(q(1)), NumericValue(NonNumericToken{"1"}), tol));
}

TEST(Numeric, FormatRational) {
  EXPECT_EQ(format_rational(q(314, 625)), "0.5024");
  EXPECT_EQ(format_rational(q(1, 3)), "1/3");
  EXPECT_EQ(format_rational(q(-7, 2)), "-3.5");
}

TEST(Numeric, ParseDigitsIsBaseTen) {
  EXPECT_EQ(parse_digits("0050"), BigInt(50));
  EXPECT_THROW(parse_digits("1a"), std::invalid_argument);
}

TEST(CanonicalKey, CommutativeOperandsCollide) {
  EXPECT_EQ(canonical_key(parse_expression("4*20")), canonical_key(parse_expression("20 × 4")));
  EXPECT_EQ(canonical_key(parse_expression("(1+2)+3")), canonical_key(parse_expression("3+(2+1)")));
  EXPECT_NE(canonical_key(parse_expression("8-2")), canonical_key(parse_expression("2-8")));
  EXPECT_NE(canonical_key(parse_expression("8/2")), canonical_key(parse_expression("2/8")));
}

// print() re-parses to the same tree, for random well-formed input
TEST(Property, PrintRoundTrip) {
  std::mt19937_64 rng(11);
  const char* ops[] = {" + ", " - ", " * ", " / ", " ^ "};
  for (int i = 0; i < 2000; ++i) {
    std::string s = std::to_string(rng() % 100);
    const int terms = 1 + static_cast<int>(rng() % 5);
    for (int t = 0; t < terms; ++t) {
      std::string operand = std::to_string(rng() % 50) + (rng() % 3 == 0 ? ".5" : "");
      if (rng() % 4 == 0) operand = "(" + operand + " - " + std::to_string(rng() % 9) + ")";
      if (rng() % 6 == 0) operand = "-" + operand;
      s += ops[rng() % 5] + operand;
    }
    const auto a = parse_expression(s);
    const auto b = parse_expression(a.print());
    EXPECT_TRUE(a.structurally_equal(b)) << s << " vs " << a.print();
    EXPECT_EQ(a.print(), b.print());
  }
}

// numeric_equal is symmetric and reflexive
TEST(Property, EqualitySymmetric) {
  std::mt19937_64 rng(5);
  const TolerancePolicy tol;
  for (int i = 0; i < 2000; ++i) {
    const NumericValue a(q(static_cast<long long>(rng() % 2001) - 1000, 1 + static_cast<long long>(rng() % 50)));
    const NumericValue b(Decimal::from_double(static_cast<double>(rng() % 20001) / 100.0 - 100.0));
    EXPECT_EQ(numeric_equal(a, b, tol), numeric_equal(b, a, tol));
    EXPECT_TRUE(numeric_equal(a, a, tol));
    EXPECT_TRUE(numeric_equal(b, b, tol));
  }
}
