#include "tipcrit/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace tipcrit {

struct FieldExpr::Node {
  Op op;
  double value = 0.0;
  int exponent = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

ParseError::ParseError(Kind kind, const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)),
      kind_(kind),
      offset_(offset) {}

namespace {

using Node = FieldExpr::Node;
using Op = FieldExpr::Op;

double integer_power(double base, int n) {
  if (n < 0) {
    if (base == 0.0) throw EvalError("division by zero in negative power");
    return 1.0 / integer_power(base, -n);
  }
  double result = 1.0;
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

double eval_node(const Node& n, double x) {
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Variable: return x;
    case Op::Add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case Op::Sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case Op::Mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case Op::Div: {
      const double den = eval_node(*n.rhs, x);
      if (den == 0.0) throw EvalError("division by zero");
      return eval_node(*n.lhs, x) / den;
    }
    case Op::Pow: return integer_power(eval_node(*n.lhs, x), n.exponent);
    case Op::Neg: return -eval_node(*n.lhs, x);
    case Op::Sin: return std::sin(eval_node(*n.lhs, x));
    case Op::Cos: return std::cos(eval_node(*n.lhs, x));
    case Op::Exp: return std::exp(eval_node(*n.lhs, x));
    case Op::Tanh: return std::tanh(eval_node(*n.lhs, x));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Tanh: return "tanh";
    default: return "?";
  }
}

void print_node(std::ostream& os, const Node& n, int parent_prec) {
  const int prec = precedence(n.op);
  const bool paren = prec < parent_prec;
  if (paren) os << '(';
  switch (n.op) {
    case Op::Constant: {
      std::ostringstream num;
      num.precision(17);
      num << n.value;
      os << num.str();
      break;
    }
    case Op::Variable: os << 'x'; break;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-' : n.op == Op::Mul ? '*' : '/';
      print_node(os, *n.lhs, prec);
      os << sym;
      // Right operand of - and / binds tighter to keep the tree's grouping.
      print_node(os, *n.rhs, (n.op == Op::Sub || n.op == Op::Div) ? prec + 1 : prec);
      break;
    }
    case Op::Pow:
      print_node(os, *n.lhs, prec + 1);
      os << '^' << n.exponent;
      break;
    case Op::Neg:
      os << '-';
      print_node(os, *n.lhs, prec);
      break;
    default:
      os << function_name(n.op) << '(';
      print_node(os, *n.lhs, 0);
      os << ')';
      break;
  }
  if (paren) os << ')';
}

}  // namespace

FieldExpr FieldExpr::constant(double value) {
  return FieldExpr(std::make_shared<const Node>(Node{Op::Constant, value, 0, nullptr, nullptr}));
}

FieldExpr FieldExpr::variable() {
  return FieldExpr(std::make_shared<const Node>(Node{Op::Variable, 0.0, 0, nullptr, nullptr}));
}

FieldExpr FieldExpr::unary(Op op, FieldExpr arg) {
  return FieldExpr(std::make_shared<const Node>(Node{op, 0.0, 0, std::move(arg.node_), nullptr}));
}

FieldExpr FieldExpr::binary(Op op, FieldExpr lhs, FieldExpr rhs) {
  return FieldExpr(
      std::make_shared<const Node>(Node{op, 0.0, 0, std::move(lhs.node_), std::move(rhs.node_)}));
}

FieldExpr FieldExpr::power(FieldExpr base, int exponent) {
  return FieldExpr(
      std::make_shared<const Node>(Node{Op::Pow, 0.0, exponent, std::move(base.node_), nullptr}));
}

FieldExpr::Op FieldExpr::op() const noexcept { return node_->op; }
double FieldExpr::value() const noexcept { return node_->value; }
int FieldExpr::exponent() const noexcept { return node_->exponent; }
FieldExpr FieldExpr::lhs() const { return FieldExpr(node_->lhs); }
FieldExpr FieldExpr::rhs() const { return FieldExpr(node_->rhs); }

bool FieldExpr::is_constant(double v) const noexcept {
  return node_->op == Op::Constant && node_->value == v;
}

double FieldExpr::operator()(double x) const {
  const double result = eval_node(*node_, x);
  if (!std::isfinite(result)) throw EvalError("non-finite value");
  return result;
}

std::string FieldExpr::to_string() const {
  std::ostringstream os;
  print_node(os, *node_, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FieldExpr parse() {
    FieldExpr e = expression();
    skip_ws();
    if (pos_ < text_.size()) syntax_error("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void syntax_error(const std::string& what) const {
    throw ParseError(ParseError::Kind::Syntax, "syntax error: " + what, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) syntax_error(std::string("expected '") + c + "'");
  }

  FieldExpr expression() {
    FieldExpr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = FieldExpr::binary(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = FieldExpr::binary(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  FieldExpr term() {
    FieldExpr lhs = signed_factor();
    for (;;) {
      if (accept('*')) {
        lhs = FieldExpr::binary(Op::Mul, lhs, signed_factor());
      } else if (accept('/')) {
        lhs = FieldExpr::binary(Op::Div, lhs, signed_factor());
      } else {
        return lhs;
      }
    }
  }

  FieldExpr signed_factor() {
    if (accept('-')) return FieldExpr::unary(Op::Neg, signed_factor());
    if (accept('+')) return signed_factor();
    return power();
  }

  FieldExpr power() {
    FieldExpr base = primary();
    if (accept('^')) return FieldExpr::power(base, integer_exponent());
    return base;
  }

  int integer_exponent() {
    skip_ws();
    const bool parenthesized = accept('(');
    skip_ws();
    bool negative = false;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      negative = text_[pos_] == '-';
      ++pos_;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) {
      pos_ = start;
      syntax_error("expected integer exponent");
    }
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
      syntax_error("exponent must be an integer");
    }
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc{} || ptr != text_.data() + pos_) {
      pos_ = start;
      syntax_error("exponent out of range");
    }
    if (parenthesized) expect(')');
    return negative ? -value : value;
  }

  FieldExpr primary() {
    skip_ws();
    if (pos_ >= text_.size()) syntax_error("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      FieldExpr inner = expression();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    syntax_error("unexpected character '" + std::string(1, c) + "'");
  }

  FieldExpr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) {
      pos_ = start;
      syntax_error("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark;
        syntax_error("malformed exponent in number");
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc{} || ptr != text_.data() + pos_) {
      pos_ = start;
      syntax_error("malformed number");
    }
    return FieldExpr::constant(value);
  }

  FieldExpr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "x" || name == "y") {
      if (variable_name_ && *variable_name_ != name[0]) {
        throw ParseError(ParseError::Kind::UnknownIdentifier,
                         "mixed variable names '" + std::string(1, *variable_name_) + "' and '" +
                             std::string(name) + "'",
                         start);
      }
      variable_name_ = name[0];
      return FieldExpr::variable();
    }
    Op op;
    if (name == "sin") {
      op = Op::Sin;
    } else if (name == "cos") {
      op = Op::Cos;
    } else if (name == "exp") {
      op = Op::Exp;
    } else if (name == "tanh") {
      op = Op::Tanh;
    } else {
      throw ParseError(ParseError::Kind::UnknownIdentifier,
                       "unknown identifier '" + std::string(name) + "'", start);
    }
    expect('(');
    FieldExpr arg = expression();
    expect(')');
    return FieldExpr::unary(op, arg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::optional<char> variable_name_;
};

}  // namespace

FieldExpr parse_field(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Differentiation. The builders fold the 0/1 identities that the chain and
// product rules produce so derivative trees stay small.

namespace {

FieldExpr add(const FieldExpr& a, const FieldExpr& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (a.op() == Op::Constant && b.op() == Op::Constant) return FieldExpr::constant(a.value() + b.value());
  return FieldExpr::binary(Op::Add, a, b);
}

FieldExpr neg(const FieldExpr& a) {
  if (a.op() == Op::Constant) return FieldExpr::constant(-a.value());
  if (a.op() == Op::Neg) return a.lhs();
  return FieldExpr::unary(Op::Neg, a);
}

FieldExpr sub(const FieldExpr& a, const FieldExpr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return neg(b);
  if (a.op() == Op::Constant && b.op() == Op::Constant) return FieldExpr::constant(a.value() - b.value());
  return FieldExpr::binary(Op::Sub, a, b);
}

FieldExpr mul(const FieldExpr& a, const FieldExpr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return FieldExpr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.op() == Op::Constant && b.op() == Op::Constant) return FieldExpr::constant(a.value() * b.value());
  return FieldExpr::binary(Op::Mul, a, b);
}

FieldExpr div(const FieldExpr& a, const FieldExpr& b) {
  if (a.is_constant(0.0)) return FieldExpr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return FieldExpr::binary(Op::Div, a, b);
}

FieldExpr pow(const FieldExpr& base, int n) {
  if (n == 0) return FieldExpr::constant(1.0);
  if (n == 1) return base;
  return FieldExpr::power(base, n);
}

}  // namespace

FieldExpr differentiate(const FieldExpr& e) {
  switch (e.op()) {
    case Op::Constant: return FieldExpr::constant(0.0);
    case Op::Variable: return FieldExpr::constant(1.0);
    case Op::Add: return add(differentiate(e.lhs()), differentiate(e.rhs()));
    case Op::Sub: return sub(differentiate(e.lhs()), differentiate(e.rhs()));
    case Op::Mul: {
      const FieldExpr u = e.lhs(), v = e.rhs();
      return add(mul(differentiate(u), v), mul(u, differentiate(v)));
    }
    case Op::Div: {
      const FieldExpr u = e.lhs(), v = e.rhs();
      return div(sub(mul(differentiate(u), v), mul(u, differentiate(v))), pow(v, 2));
    }
    case Op::Pow: {
      const int n = e.exponent();
      if (n == 0) return FieldExpr::constant(0.0);
      return mul(mul(FieldExpr::constant(n), pow(e.lhs(), n - 1)), differentiate(e.lhs()));
    }
    case Op::Neg: return neg(differentiate(e.lhs()));
    case Op::Sin: return mul(FieldExpr::unary(Op::Cos, e.lhs()), differentiate(e.lhs()));
    case Op::Cos: return mul(neg(FieldExpr::unary(Op::Sin, e.lhs())), differentiate(e.lhs()));
    case Op::Exp: return mul(e, differentiate(e.lhs()));
    case Op::Tanh:
      return mul(sub(FieldExpr::constant(1.0), pow(e, 2)), differentiate(e.lhs()));
  }
  return FieldExpr::constant(0.0);
}

}  // namespace tipcrit
