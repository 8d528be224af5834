#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tipcrit {

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownIdentifier };

  ParseError(Kind kind, const std::string& message, std::size_t offset);

  Kind kind() const noexcept { return kind_; }
  // Byte offset into the parsed text where the problem was detected.
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

// Raised when an expression cannot be evaluated to a finite number.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable expression tree over a single real variable.
//
// Nodes share structure, so copies are cheap and derivative trees reuse
// subtrees of the original.
class FieldExpr {
 public:
  enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Tanh };

  struct Node;

  static FieldExpr constant(double value);
  static FieldExpr variable();
  static FieldExpr unary(Op op, FieldExpr arg);
  static FieldExpr binary(Op op, FieldExpr lhs, FieldExpr rhs);
  static FieldExpr power(FieldExpr base, int exponent);

  Op op() const noexcept;
  // Only meaningful for Constant nodes.
  double value() const noexcept;
  // Only meaningful for Pow nodes.
  int exponent() const noexcept;
  FieldExpr lhs() const;
  FieldExpr rhs() const;

  bool is_constant(double v) const noexcept;

  // Throws EvalError on division by zero or a non-finite result.
  double operator()(double x) const;

  std::string to_string() const;

 private:
  explicit FieldExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Parses infix arithmetic in one variable (x or y): + - * / unary minus,
// ^ with an integer exponent, numeric literals, and sin/cos/exp/tanh calls.
FieldExpr parse_field(std::string_view text);

// Exact symbolic derivative with respect to the expression's variable.
FieldExpr differentiate(const FieldExpr& expr);

}  // namespace tipcrit
