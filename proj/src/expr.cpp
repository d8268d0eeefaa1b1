#include "mathforge/expr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mathforge/text.hpp"
#include "mathforge/units.hpp"

namespace mathforge::expr {

ParseError::ParseError(std::size_t position, std::string expectation, std::string_view text)
    : std::runtime_error("parse error at byte " + std::to_string(position) + ": expected " +
                         expectation + " in '" + std::string(text) + "'"),
      position_(position),
      expectation_(std::move(expectation)) {}

EvalError::EvalError(EvalErrorKind kind, Span span, const std::string& what)
    : std::runtime_error(what), kind_(kind), span_(span) {}

const char* to_string(EvalErrorKind kind) {
  switch (kind) {
    case EvalErrorKind::DivisionByZero: return "DivisionByZero";
    case EvalErrorKind::Overflow: return "Overflow";
    case EvalErrorKind::Domain: return "Domain";
  }
  return "?";
}

const char* to_string(Truth t) {
  switch (t) {
    case Truth::True: return "true";
    case Truth::False: return "false";
    case Truth::Indeterminate: return "indeterminate";
  }
  return "?";
}

namespace {

enum class Tok { Number, Plus, Minus, Star, Slash, Caret, LParen, RParen, Percent, Super, Word, End };

struct Token {
  Tok kind = Tok::End;
  Span span;
  std::string literal;  // Number: normalized digits; Word: the word
  BigRational value;    // Number value, Super exponent
};

BigInt pow10(std::size_t n) {
  BigInt r = 1;
  for (std::size_t i = 0; i < n; ++i) r *= 10;
  return r;
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  auto prev_is_operand_end = [&] {
    if (out.empty()) return false;
    const Tok k = out.back().kind;
    return k == Tok::Number || k == Tok::RParen || k == Tok::Percent || k == Tok::Super;
  };
  std::size_t pos = 0;
  while (pos < s.size()) {
    const char c = s[pos];
    const text::CodePoint cp = text::decode_utf8(s, pos);
    if (text::is_space(cp.value) || c == '\n') {
      pos += cp.length;
      continue;
    }
    if (const std::size_t n = units::match_currency(s, pos)) {
      pos += n;
      continue;
    }
    if (const std::size_t n = units::match_cjk_unit(s, pos)) {
      if (!prev_is_operand_end()) throw ParseError(pos, "number before unit", s);
      pos += n;
      continue;
    }
    const bool leading_point = c == '.' && pos + 1 < s.size() && text::is_ascii_digit(s[pos + 1]);
    if (text::is_ascii_digit(c) || leading_point) {
      const std::size_t begin = pos;
      std::string int_digits;
      while (pos < s.size()) {
        if (text::is_ascii_digit(s[pos])) {
          int_digits.push_back(s[pos++]);
        } else if (s[pos] == ',' && !int_digits.empty() && pos + 3 < s.size() &&
                   text::is_ascii_digit(s[pos + 1]) && text::is_ascii_digit(s[pos + 2]) &&
                   text::is_ascii_digit(s[pos + 3]) &&
                   (pos + 4 >= s.size() || !text::is_ascii_digit(s[pos + 4]))) {
          ++pos;
        } else {
          break;
        }
      }
      std::string frac_digits;
      if (pos + 1 < s.size() && s[pos] == '.' && text::is_ascii_digit(s[pos + 1])) {
        ++pos;
        while (pos < s.size() && text::is_ascii_digit(s[pos])) frac_digits.push_back(s[pos++]);
      }
      Token t;
      t.kind = Tok::Number;
      t.span = {begin, pos};
      if (int_digits.empty()) int_digits = "0";
      t.literal = frac_digits.empty() ? int_digits : int_digits + "." + frac_digits;
      t.value = BigRational(parse_digits(int_digits + frac_digits), pow10(frac_digits.size()));
      out.push_back(std::move(t));
      continue;
    }
    if (text::is_ascii_alpha(c)) {
      const std::size_t begin = pos;
      while (pos < s.size() && text::is_ascii_alpha(s[pos])) ++pos;
      Token t;
      t.kind = Tok::Word;
      t.span = {begin, pos};
      t.literal = std::string(s.substr(begin, pos - begin));
      out.push_back(std::move(t));
      continue;
    }
    Token t;
    t.span = {pos, pos + cp.length};
    switch (cp.value) {
      case U'+': case 0xFF0B: t.kind = Tok::Plus; break;
      case U'-': case 0x2212: case 0xFF0D: t.kind = Tok::Minus; break;
      case U'*': case 0x00D7: case 0x00B7: case 0x2217: t.kind = Tok::Star; break;
      case U'/': case 0x00F7: case 0xFF0F: t.kind = Tok::Slash; break;
      case U'^': t.kind = Tok::Caret; break;
      case U'(': case 0xFF08: t.kind = Tok::LParen; break;
      case U')': case 0xFF09: t.kind = Tok::RParen; break;
      case U'%': case 0xFF05: t.kind = Tok::Percent; break;
      case 0x00B2: t.kind = Tok::Super; t.value = 2; t.literal = "2"; break;
      case 0x00B3: t.kind = Tok::Super; t.value = 3; t.literal = "3"; break;
      case 0x03C0:
        throw ParseError(pos, "numeric literal (the symbol pi is non-numeric)", s);
      default:
        throw ParseError(pos, "arithmetic expression character", s);
    }
    pos += cp.length;
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.span = {s.size(), s.size()};
  out.push_back(end);
  return out;
}

}  // namespace

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text), toks_(lex(text)) {}

  ExpressionAst run() {
    ast_.source_ = std::string(text_);
    ast_.root_ = expression();
    if (peek().kind != Tok::End) fail("operator or end of input");
    return std::move(ast_);
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }
  [[noreturn]] void fail(const std::string& expectation) const {
    throw ParseError(peek().span.begin, expectation, text_);
  }

  Span span_of(int a, int b) const { return {ast_.node(a).span.begin, ast_.node(b).span.end}; }

  int binary(BinaryOp op, int lhs, int rhs, bool superscript = false) {
    Node n;
    n.kind = NodeKind::Binary;
    n.op = op;
    n.superscript = superscript;
    n.first = lhs;
    n.second = rhs;
    n.span = span_of(lhs, rhs);
    return ast_.add(std::move(n));
  }

  int expression() {
    int lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const BinaryOp op = take().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lhs = binary(op, lhs, term());
    }
    return lhs;
  }

  bool at_times_word() const {
    return peek().kind == Tok::Word && (peek().literal == "x" || peek().literal == "X");
  }

  int term() {
    int lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash || at_times_word()) {
      const BinaryOp op = take().kind == Tok::Slash ? BinaryOp::Div : BinaryOp::Mul;
      lhs = binary(op, lhs, unary());
    }
    return lhs;
  }

  int unary() {
    if (peek().kind == Tok::Minus) {
      const Span sign = take().span;
      const int operand = unary();
      Node n;
      n.kind = NodeKind::Negate;
      n.first = operand;
      n.span = {sign.begin, ast_.node(operand).span.end};
      return ast_.add(std::move(n));
    }
    return power();
  }

  int power() {
    const int base = postfix();
    if (peek().kind == Tok::Caret) {
      take();
      return binary(BinaryOp::Pow, base, unary());
    }
    return base;
  }

  int postfix() {
    int operand = primary();
    while (true) {
      if (peek().kind == Tok::Percent) {
        const Span s = take().span;
        Node n;
        n.kind = NodeKind::Percent;
        n.first = operand;
        n.span = {ast_.node(operand).span.begin, s.end};
        operand = ast_.add(std::move(n));
      } else if (peek().kind == Tok::Super) {
        const Token& t = take();
        Node exponent;
        exponent.kind = NodeKind::Number;
        exponent.value = t.value;
        exponent.literal = t.literal;
        exponent.span = t.span;
        const int e = ast_.add(std::move(exponent));
        operand = binary(BinaryOp::Pow, operand, e, /*superscript=*/true);
      } else {
        return operand;
      }
    }
  }

  int primary() {
    if (peek().kind == Tok::Number) {
      const Token& t = take();
      Node n;
      n.kind = NodeKind::Number;
      n.value = t.value;
      n.literal = t.literal;
      n.span = t.span;
      return ast_.add(std::move(n));
    }
    if (peek().kind == Tok::LParen) {
      const Span open = take().span;
      const int inner = expression();
      if (peek().kind != Tok::RParen) fail("')'");
      const Span close = take().span;
      Node n;
      n.kind = NodeKind::Paren;
      n.first = inner;
      n.span = {open.begin, close.end};
      return ast_.add(std::move(n));
    }
    fail("number or '('");
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ExpressionAst ast_;
};

ExpressionAst parse_expression(std::string_view text) { return Parser(text).run(); }

namespace {

const char* op_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Pow: return "^";
  }
  return "?";
}

void print_node(const ExpressionAst& ast, int index, std::string& out) {
  const Node& n = ast.node(index);
  switch (n.kind) {
    case NodeKind::Number:
      out += n.literal;
      return;
    case NodeKind::Negate:
      out += '-';
      print_node(ast, n.first, out);
      return;
    case NodeKind::Percent:
      print_node(ast, n.first, out);
      out += '%';
      return;
    case NodeKind::Paren:
      out += '(';
      print_node(ast, n.first, out);
      out += ')';
      return;
    case NodeKind::Binary:
      print_node(ast, n.first, out);
      if (n.superscript) {
        out += ast.node(n.second).literal == "3" ? "³" : "²";
        return;
      }
      out += ' ';
      out += op_symbol(n.op);
      out += ' ';
      print_node(ast, n.second, out);
      return;
  }
}

bool equal_nodes(const ExpressionAst& a, int ia, const ExpressionAst& b, int ib) {
  const Node& x = a.node(ia);
  const Node& y = b.node(ib);
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::Number:
      return x.value == y.value;
    case NodeKind::Negate:
    case NodeKind::Percent:
    case NodeKind::Paren:
      return equal_nodes(a, x.first, b, y.first);
    case NodeKind::Binary:
      return x.op == y.op && equal_nodes(a, x.first, b, y.first) &&
             equal_nodes(a, x.second, b, y.second);
  }
  return false;
}

}  // namespace

std::string ExpressionAst::print() const {
  std::string out;
  if (root_ >= 0) print_node(*this, root_, out);
  return out;
}

bool ExpressionAst::structurally_equal(const ExpressionAst& other) const {
  if (root_ < 0 || other.root_ < 0) return root_ == other.root_;
  return equal_nodes(*this, root_, other, other.root_);
}

namespace {

class Evaluator {
 public:
  Evaluator(const ExpressionAst& ast, unsigned cap) : ast_(ast), cap_(cap) {}

  NumericValue eval(int index) {
    const Node& n = ast_.node(index);
    switch (n.kind) {
      case NodeKind::Number:
        return checked(n.value, n.span);
      case NodeKind::Paren:
        return eval(n.first);
      case NodeKind::Negate: {
        const NumericValue v = eval(n.first);
        if (v.is_rational()) return NumericValue(BigRational(-v.rational()));
        return inexact(-v.to_double(), n.span);
      }
      case NodeKind::Percent: {
        const NumericValue v = eval(n.first);
        if (v.is_rational()) return checked(v.rational() / 100, n.span);
        return inexact(v.to_double() / 100.0, n.span);
      }
      case NodeKind::Binary:
        return binary(n, eval(n.first), eval(n.second));
    }
    throw EvalError(EvalErrorKind::Domain, n.span, "unknown node");
  }

 private:
  NumericValue checked(BigRational r, Span span) const {
    if (bit_size(r) > cap_) {
      throw EvalError(EvalErrorKind::Overflow, span,
                      "rational exceeds " + std::to_string(cap_) + " bits");
    }
    return NumericValue(std::move(r));
  }

  static NumericValue inexact(double v, Span span) {
    if (std::isnan(v)) throw EvalError(EvalErrorKind::Domain, span, "result is not a real number");
    if (!std::isfinite(v)) throw EvalError(EvalErrorKind::Overflow, span, "floating result overflowed");
    return NumericValue(Decimal::from_double(v));
  }

  static bool is_zero(const NumericValue& v) {
    return v.is_rational() ? v.rational() == 0 : v.to_double() == 0.0;
  }

  NumericValue binary(const Node& n, const NumericValue& a, const NumericValue& b) {
    if ((n.op == BinaryOp::Div) && is_zero(b)) {
      throw EvalError(EvalErrorKind::DivisionByZero, n.span, "division by zero");
    }
    if (n.op == BinaryOp::Pow) return power(n, a, b);
    if (a.is_rational() && b.is_rational()) {
      const BigRational& x = a.rational();
      const BigRational& y = b.rational();
      switch (n.op) {
        case BinaryOp::Add: return checked(x + y, n.span);
        case BinaryOp::Sub: return checked(x - y, n.span);
        case BinaryOp::Mul: return checked(x * y, n.span);
        case BinaryOp::Div: return checked(x / y, n.span);
        case BinaryOp::Pow: break;
      }
    }
    const double x = a.to_double();
    const double y = b.to_double();
    switch (n.op) {
      case BinaryOp::Add: return inexact(x + y, n.span);
      case BinaryOp::Sub: return inexact(x - y, n.span);
      case BinaryOp::Mul: return inexact(x * y, n.span);
      case BinaryOp::Div: return inexact(x / y, n.span);
      case BinaryOp::Pow: break;
    }
    throw EvalError(EvalErrorKind::Domain, n.span, "unsupported operator");
  }

  NumericValue power(const Node& n, const NumericValue& a, const NumericValue& b) {
    const bool integral_exponent =
        b.is_rational() && boost::multiprecision::denominator(b.rational()) == 1;
    if (a.is_rational() && integral_exponent) {
      const BigRational& base = a.rational();
      const BigInt exp = boost::multiprecision::numerator(b.rational());
      if (base == 0 && exp < 0) {
        throw EvalError(EvalErrorKind::DivisionByZero, n.span, "zero raised to a negative power");
      }
      if (exp == 0) return NumericValue(BigRational(1));
      if (base == 0 || base == 1) return NumericValue(base);
      if (base == -1) return NumericValue(BigRational(exp % 2 == 0 ? 1 : -1));
      const BigInt mag = exp < 0 ? BigInt(-exp) : exp;
      // |base| != 0, 1 so every factor adds at least one bit to num or den.
      if (mag > cap_) {
        throw EvalError(EvalErrorKind::Overflow, n.span, "power exceeds the rational bit cap");
      }
      BigRational result = 1;
      BigRational factor = base;
      auto e = mag.convert_to<unsigned long>();
      while (e > 0) {
        if (e & 1UL) result = checked(result * factor, n.span).rational();
        e >>= 1;
        if (e > 0) factor = checked(factor * factor, n.span).rational();
      }
      if (exp < 0) result = 1 / result;
      return NumericValue(std::move(result));
    }
    const double x = a.to_double();
    const double y = b.to_double();
    if (x < 0 && !integral_exponent) {
      throw EvalError(EvalErrorKind::Domain, n.span, "fractional power of a negative number");
    }
    if (x == 0 && y < 0) {
      throw EvalError(EvalErrorKind::DivisionByZero, n.span, "zero raised to a negative power");
    }
    return inexact(std::pow(x, y), n.span);
  }

  const ExpressionAst& ast_;
  unsigned cap_;
};

void collect_chain(const ExpressionAst& ast, int index, BinaryOp op, std::vector<std::string>& out);

std::string key_of(const ExpressionAst& ast, int index) {
  const Node& n = ast.node(index);
  switch (n.kind) {
    case NodeKind::Number: return format_rational(n.value);
    case NodeKind::Paren: return key_of(ast, n.first);
    case NodeKind::Negate: return "neg(" + key_of(ast, n.first) + ")";
    case NodeKind::Percent: return "pct(" + key_of(ast, n.first) + ")";
    case NodeKind::Binary: {
      if (n.op == BinaryOp::Add || n.op == BinaryOp::Mul) {
        std::vector<std::string> parts;
        collect_chain(ast, index, n.op, parts);
        std::sort(parts.begin(), parts.end());
        std::string out = std::string(op_symbol(n.op)) + "(";
        for (std::size_t i = 0; i < parts.size(); ++i) {
          if (i) out += ',';
          out += parts[i];
        }
        return out + ")";
      }
      return std::string(op_symbol(n.op)) + "(" + key_of(ast, n.first) + "," +
             key_of(ast, n.second) + ")";
    }
  }
  return "?";
}

void collect_chain(const ExpressionAst& ast, int index, BinaryOp op, std::vector<std::string>& out) {
  const Node* n = &ast.node(index);
  while (n->kind == NodeKind::Paren) {
    index = n->first;
    n = &ast.node(index);
  }
  if (n->kind == NodeKind::Binary && n->op == op) {
    collect_chain(ast, n->first, op, out);
    collect_chain(ast, n->second, op, out);
  } else {
    out.push_back(key_of(ast, index));
  }
}

}  // namespace

NumericValue eval_expression(const ExpressionAst& ast, unsigned bit_cap) {
  return Evaluator(ast, bit_cap).eval(ast.root_index());
}

EquationVerdict check_equation(const Equation& eq, const TolerancePolicy& tol) {
  try {
    const NumericValue lhs = eval_expression(eq.lhs);
    const NumericValue rhs = eval_expression(eq.rhs);
    if (numeric_equal(lhs, rhs, tol)) return {Truth::True, ""};
    return {Truth::False, lhs.to_string() + " != " + rhs.to_string()};
  } catch (const EvalError& e) {
    return {Truth::Indeterminate, std::string(to_string(e.kind())) + ": " + e.what()};
  }
}

std::string canonical_key(const ExpressionAst& ast) {
  return ast.root_index() < 0 ? "" : key_of(ast, ast.root_index());
}

}  // namespace mathforge::expr
