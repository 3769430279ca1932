#include "volterra/expr.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>

#include "volterra/error.hpp"

namespace volterra {

struct Expr::Node {
  Kind kind = Kind::Constant;
  double value = 0.0;
  Var var = Var::T;
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  Expr a{nullptr};  // unary child or binary lhs
  Expr b{nullptr};  // binary rhs
  std::uint8_t vars = 0;
};

namespace {

constexpr std::uint8_t var_bit(Var v) {
  switch (v) {
    case Var::T: return 1;
    case Var::S: return 2;
    case Var::U: return 4;
  }
  return 0;
}

}  // namespace

Expr::Expr() : node_(std::make_shared<const Node>()) {}

Expr Expr::constant(double value) {
  if (!std::isfinite(value)) throw PreconditionError("expression constants must be finite");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(Var v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->var = v;
  n->vars = var_bit(v);
  return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr child) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unary;
  n->uop = op;
  n->vars = child.node_->vars;
  n->a = std::move(child);
  return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  if (op == BinaryOp::Pow && !rhs.is_constant())
    throw PreconditionError("pow exponent must be a constant");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Binary;
  n->bop = op;
  n->vars = lhs.node_->vars | rhs.node_->vars;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const noexcept { return node_->kind; }
double Expr::value() const { return node_->value; }
Var Expr::variable() const { return node_->var; }
UnaryOp Expr::unary_op() const { return node_->uop; }
BinaryOp Expr::binary_op() const { return node_->bop; }
const Expr& Expr::child() const { return node_->a; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }
bool Expr::uses(Var v) const noexcept { return (node_->vars & var_bit(v)) != 0; }
bool Expr::is_closed() const noexcept { return node_->vars == 0; }

bool operator==(const Expr& x, const Expr& y) {
  if (x.node_ == y.node_) return true;
  const auto& a = *x.node_;
  const auto& b = *y.node_;
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Constant: return a.value == b.value;
    case Expr::Kind::Variable: return a.var == b.var;
    case Expr::Kind::Unary: return a.uop == b.uop && a.a == b.a;
    case Expr::Kind::Binary: return a.bop == b.bop && a.a == b.a && a.b == b.b;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Atan: return "atan";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Abs: return "abs";
  }
  return "?";
}

const char* binary_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return " + ";
    case BinaryOp::Sub: return " - ";
    case BinaryOp::Mul: return " * ";
    case BinaryOp::Div: return " / ";
    case BinaryOp::Pow: return " ^ ";
  }
  return " ? ";
}

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      if (std::signbit(e.value()))
        out += fmt::format("(-{:.17g})", -e.value());
      else
        out += fmt::format("{:.17g}", e.value());
      return;
    case Expr::Kind::Variable:
      out += static_cast<char>(e.variable());
      return;
    case Expr::Kind::Unary:
      if (e.unary_op() == UnaryOp::Neg) {
        out += "(-";
        print(e.child(), out);
        out += ')';
      } else {
        out += unary_name(e.unary_op());
        out += '(';
        print(e.child(), out);
        out += ')';
      }
      return;
    case Expr::Kind::Binary:
      out += '(';
      print(e.lhs(), out);
      out += binary_symbol(e.binary_op());
      print(e.rhs(), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void domain_error(DomainError::Kind kind, const Expr::Node& n, const char* message);

double eval(const Expr::Node& n, const Bindings& b);

double eval_unary(const Expr::Node& n, double x) {
  switch (n.uop) {
    case UnaryOp::Neg: return -x;
    case UnaryOp::Exp: return std::exp(x);
    case UnaryOp::Log:
      if (!(x > 0.0)) domain_error(DomainError::Kind::LogNonPositive, n, "log of non-positive value");
      return std::log(x);
    case UnaryOp::Sin: return std::sin(x);
    case UnaryOp::Cos: return std::cos(x);
    case UnaryOp::Atan: return std::atan(x);
    case UnaryOp::Sqrt:
      if (x < 0.0) domain_error(DomainError::Kind::SqrtNegative, n, "sqrt of negative value");
      return std::sqrt(x);
    case UnaryOp::Abs: return std::fabs(x);
  }
  return x;
}

double eval_pow(const Expr::Node& n, double base, double exponent) {
  if (base == 0.0 && exponent < 0.0)
    domain_error(DomainError::Kind::ZeroToNegative, n, "zero raised to a negative power");
  if (base < 0.0 && exponent != std::trunc(exponent))
    domain_error(DomainError::Kind::NegativeBase, n, "negative base with non-integer exponent");
  if (exponent == 2.0) return base * base;
  return std::pow(base, exponent);
}

double eval(const Expr::Node& n, const Bindings& b) {
  double r = 0.0;
  switch (n.kind) {
    case Expr::Kind::Constant: return n.value;
    case Expr::Kind::Variable: {
      const std::optional<double>* slot = n.var == Var::T ? &b.t : n.var == Var::S ? &b.s : &b.u;
      if (!slot->has_value()) throw UnboundVariable(static_cast<char>(n.var));
      return **slot;
    }
    case Expr::Kind::Unary:
      r = eval_unary(n, eval(n.a.node(), b));
      break;
    case Expr::Kind::Binary: {
      const double x = eval(n.a.node(), b);
      const double y = eval(n.b.node(), b);
      switch (n.bop) {
        case BinaryOp::Add: r = x + y; break;
        case BinaryOp::Sub: r = x - y; break;
        case BinaryOp::Mul: r = x * y; break;
        case BinaryOp::Div:
          if (y == 0.0) domain_error(DomainError::Kind::DivisionByZero, n, "division by zero");
          r = x / y;
          break;
        case BinaryOp::Pow: r = eval_pow(n, x, y); break;
      }
      break;
    }
  }
  if (!std::isfinite(r)) domain_error(DomainError::Kind::NonFinite, n, "non-finite value");
  return r;
}

}  // namespace

double evaluate(const Expr& e, const Bindings& b) { return eval(e.node(), b); }

// ---------------------------------------------------------------------------
// Differentiation

namespace {

// Folds only when the binary64 result is exact, so folding never changes a value.
std::optional<double> exact_fold(BinaryOp op, double x, double y) {
  switch (op) {
    case BinaryOp::Add: {
      const double r = x + y;
      if (std::isfinite(r) && r - x == y && r - y == x) return r;
      return std::nullopt;
    }
    case BinaryOp::Sub: {
      const double r = x - y;
      if (std::isfinite(r) && r + y == x && x - r == y) return r;
      return std::nullopt;
    }
    case BinaryOp::Mul: {
      const double r = x * y;
      if (std::isfinite(r) && std::fma(x, y, -r) == 0.0) return r;
      return std::nullopt;
    }
    case BinaryOp::Div: {
      if (y == 0.0) return std::nullopt;
      const double r = x / y;
      if (std::isfinite(r) && std::fma(r, y, -x) == 0.0) return r;
      return std::nullopt;
    }
    case BinaryOp::Pow: return std::nullopt;
  }
  return std::nullopt;
}

Expr s_neg(const Expr& a) {
  if (a.is_constant()) return constant(-a.value());
  return -a;
}

Expr s_binary(BinaryOp op, const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant())
    if (auto r = exact_fold(op, a.value(), b.value())) return constant(*r);
  return Expr::binary(op, a, b);
}

Expr s_add(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return b;
  return s_binary(BinaryOp::Add, a, b);
}

Expr s_sub(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return s_neg(b);
  return s_binary(BinaryOp::Sub, a, b);
}

Expr s_mul(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return s_binary(BinaryOp::Mul, a, b);
}

Expr s_div(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return constant(0.0);
  if (b.is_constant(1.0)) return a;
  return s_binary(BinaryOp::Div, a, b);
}

Expr derive(const Expr& e, Var v) {
  if (!e.uses(v)) return constant(0.0);
  switch (e.kind()) {
    case Expr::Kind::Constant: return constant(0.0);
    case Expr::Kind::Variable: return constant(e.variable() == v ? 1.0 : 0.0);
    case Expr::Kind::Unary: {
      const Expr& g = e.child();
      const Expr dg = derive(g, v);
      switch (e.unary_op()) {
        case UnaryOp::Neg: return s_neg(dg);
        case UnaryOp::Exp: return s_mul(dg, e);
        case UnaryOp::Log: return s_div(dg, g);
        case UnaryOp::Sin: return s_mul(dg, cos(g));
        case UnaryOp::Cos: return s_neg(s_mul(dg, sin(g)));
        case UnaryOp::Atan: return s_div(dg, constant(1.0) + pow(g, 2.0));
        case UnaryOp::Sqrt: return s_div(dg, constant(2.0) * e);
        case UnaryOp::Abs:
          throw NonDifferentiable("abs is not differentiable symbolically: " + to_string(e));
      }
      break;
    }
    case Expr::Kind::Binary: {
      const Expr& f = e.lhs();
      const Expr& g = e.rhs();
      switch (e.binary_op()) {
        case BinaryOp::Add: return s_add(derive(f, v), derive(g, v));
        case BinaryOp::Sub: return s_sub(derive(f, v), derive(g, v));
        case BinaryOp::Mul: return s_add(s_mul(derive(f, v), g), s_mul(f, derive(g, v)));
        case BinaryOp::Div:
          return s_div(s_sub(s_mul(derive(f, v), g), s_mul(f, derive(g, v))), pow(g, 2.0));
        case BinaryOp::Pow: {
          const double c = g.value();
          const Expr df = derive(f, v);
          if (c == 0.0) return constant(0.0);
          if (c == 1.0) return df;
          return s_mul(s_mul(constant(c), pow(f, c - 1.0)), df);
        }
      }
      break;
    }
  }
  return constant(0.0);
}

}  // namespace

Expr differentiate(const Expr& e, Var v) { return derive(e, v); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    skip_space();
    if (pos_ == text_.size()) throw SyntaxError(pos_, "empty input");
    Expr e = expression();
    skip_space();
    if (pos_ != text_.size()) {
      if (text_[pos_] == ')') throw SyntaxError(pos_, "unbalanced ')'");
      throw SyntaxError(pos_, fmt::format("unexpected '{}'", text_[pos_]));
    }
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = lhs + term();
      else if (accept('-'))
        lhs = lhs - term();
      else
        return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = lhs * unary();
      else if (accept('/'))
        lhs = lhs / unary();
      else
        return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return power();
  }

  // Right associative: 2^3^2 == 2^(3^2). The exponent binds a unary, so 2^-1 is valid.
  Expr power() {
    Expr base = primary();
    if (!accept('^')) return base;
    skip_space();
    const std::size_t at = pos_;
    Expr exponent = unary();
    if (!exponent.is_closed()) throw SyntaxError(at, "exponent must be a constant expression");
    double value = 0.0;
    try {
      value = evaluate(exponent, {});
    } catch (const DomainError& err) {
      throw SyntaxError(at, std::string("exponent is not a finite constant: ") + err.what());
    }
    return pow(base, value);
  }

  Expr primary() {
    skip_space();
    if (pos_ == text_.size()) throw SyntaxError(pos_, "unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expression();
      if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw SyntaxError(pos_, fmt::format("unexpected '{}'", c));
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        ++pos_;
      } else if ((c == 'e' || c == 'E') && pos_ + 1 < text_.size() &&
                 (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
                  ((text_[pos_ + 1] == '+' || text_[pos_ + 1] == '-') && pos_ + 2 < text_.size() &&
                   std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))))) {
        pos_ += 2;
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        // "2e", "3x" and similar run-ons.
        ++pos_;
      } else {
        break;
      }
    }
    const std::string_view literal = text_.substr(start, pos_ - start);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), value);
    if (ec != std::errc{} || end != literal.data() + literal.size() || !std::isfinite(value))
      throw SyntaxError(start, fmt::format("malformed number '{}'", literal));
    return constant(value);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "t") return t_var();
    if (name == "s") return s_var();
    if (name == "u") return u_var();
    if (name == "pi") return constant(std::numbers::pi);
    if (name == "e") return constant(std::numbers::e);

    static constexpr std::pair<std::string_view, UnaryOp> functions[] = {
        {"exp", UnaryOp::Exp},   {"log", UnaryOp::Log},   {"sin", UnaryOp::Sin},
        {"cos", UnaryOp::Cos},   {"atan", UnaryOp::Atan}, {"sqrt", UnaryOp::Sqrt},
        {"abs", UnaryOp::Abs},
    };
    for (const auto& [fname, op] : functions) {
      if (name != fname) continue;
      if (!accept('(')) throw SyntaxError(pos_, fmt::format("expected '(' after '{}'", name));
      Expr arg = expression();
      if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
      return Expr::unary(op, std::move(arg));
    }
    throw SyntaxError(start, fmt::format("unknown identifier '{}'", name));
  }
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Builders

Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::Neg, a); }
Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Div, a, b); }
Expr exp(const Expr& a) { return Expr::unary(UnaryOp::Exp, a); }
Expr log(const Expr& a) { return Expr::unary(UnaryOp::Log, a); }
Expr sin(const Expr& a) { return Expr::unary(UnaryOp::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(UnaryOp::Cos, a); }
Expr atan(const Expr& a) { return Expr::unary(UnaryOp::Atan, a); }
Expr sqrt(const Expr& a) { return Expr::unary(UnaryOp::Sqrt, a); }
Expr abs(const Expr& a) { return Expr::unary(UnaryOp::Abs, a); }
Expr pow(const Expr& base, double exponent) {
  return Expr::binary(BinaryOp::Pow, base, constant(exponent));
}

namespace {
[[noreturn]] void domain_error(DomainError::Kind kind, const Expr::Node& n, const char* message) {
  std::string printed = n.kind == Expr::Kind::Unary ? to_string(Expr::unary(n.uop, n.a))
                                                     : to_string(Expr::binary(n.bop, n.a, n.b));
  throw DomainError(kind, std::move(printed), message);
}
}  // namespace

}  // namespace volterra
