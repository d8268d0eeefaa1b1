#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mathforge/numeric.hpp"

namespace mathforge::expr {

/// Half-open byte range into the text the node or equation came from.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

enum class NodeKind { Number, Negate, Binary, Percent, Paren };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node {
  NodeKind kind = NodeKind::Number;
  BinaryOp op = BinaryOp::Add;
  BigRational value;     // Number
  std::string literal;   // Number, without separators ("1350", "0.4")
  int first = -1;        // operand, or left operand of Binary
  int second = -1;       // right operand of Binary
  bool superscript = false;  // Pow written as ² or ³
  Span span;
};

/// Arena-backed expression tree. Leaves are always number literals.
class ExpressionAst {
 public:
  const Node& root() const { return nodes_.at(static_cast<std::size_t>(root_)); }
  const Node& node(int index) const { return nodes_.at(static_cast<std::size_t>(index)); }
  int root_index() const { return root_; }
  std::size_t size() const { return nodes_.size(); }

  /// The text handed to parse_expression.
  const std::string& source() const { return source_; }

  /// ASCII rendering that re-parses to a structurally identical tree.
  std::string print() const;

  /// Same shape, operators and literal values; spans are ignored.
  bool structurally_equal(const ExpressionAst& other) const;

 private:
  friend class Parser;
  int add(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, std::string expectation, std::string_view text);
  std::size_t position() const { return position_; }
  const std::string& expectation() const { return expectation_; }

 private:
  std::size_t position_;
  std::string expectation_;
};

enum class EvalErrorKind { DivisionByZero, Overflow, Domain };

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, Span span, const std::string& what);
  EvalErrorKind kind() const { return kind_; }
  Span span() const { return span_; }

 private:
  EvalErrorKind kind_;
  Span span_;
};

const char* to_string(EvalErrorKind kind);

/// Parses a chain-of-thought arithmetic expression. Currency symbols,
/// thousands separators and CJK units following a number are dropped;
/// "x"/"X" is multiplication between operands; ² and ³ are powers.
ExpressionAst parse_expression(std::string_view text);

/// Exact rational evaluation; only non-integer powers leave the rationals.
NumericValue eval_expression(const ExpressionAst& ast, unsigned bit_cap = kRationalBitCap);

struct EquationOrigin {
  std::string path_id;
  int index = 0;
};

/// One link "lhs = rhs" of a (possibly chained) equality.
struct Equation {
  ExpressionAst lhs;
  ExpressionAst rhs;
  Span span;
  EquationOrigin origin;

  std::string to_string() const { return lhs.print() + " = " + rhs.print(); }
};

enum class Truth { True, False, Indeterminate };
const char* to_string(Truth t);

struct EquationVerdict {
  Truth truth = Truth::Indeterminate;
  std::string reason;
};

EquationVerdict check_equation(const Equation& eq, const TolerancePolicy& tol = {});

/// Order-insensitive key: parentheses dropped, + and * chains flattened and
/// their operands sorted. "4*20" and "20*4" share a key.
std::string canonical_key(const ExpressionAst& ast);

}  // namespace mathforge::expr
