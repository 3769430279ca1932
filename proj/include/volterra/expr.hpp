#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace volterra {

/// The three variables an expression may mention.
enum class Var : char { T = 't', S = 's', U = 'u' };

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Atan, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

/// Values for the variables of an expression. Unset members are unbound.
struct Bindings {
  std::optional<double> t{};
  std::optional<double> s{};
  std::optional<double> u{};
};

/// Immutable scalar expression tree over t, s and u.
///
/// Copies share structure; a node is never modified after construction, so an
/// Expr can be evaluated from several threads at once. The right operand of a
/// Pow node is always a Constant.
class Expr {
 public:
  enum class Kind { Constant, Variable, Unary, Binary };

  /// The constant 0.
  Expr();

  static Expr constant(double value);
  static Expr variable(Var v);
  static Expr unary(UnaryOp op, Expr child);
  /// Throws PreconditionError for a Pow whose exponent is not a Constant.
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  Kind kind() const noexcept;
  bool is_constant() const noexcept { return kind() == Kind::Constant; }
  bool is_constant(double v) const noexcept { return is_constant() && value() == v; }

  // Accessors; each is valid only for the matching kind.
  double value() const;
  Var variable() const;
  UnaryOp unary_op() const;
  BinaryOp binary_op() const;
  const Expr& child() const;
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool uses(Var v) const noexcept;
  /// True if no variable occurs anywhere in the tree.
  bool is_closed() const noexcept;

  /// Structural equality (constants compared bitwise-equal as doubles).
  friend bool operator==(const Expr& a, const Expr& b);

  /// Opaque tree node; defined in expr.cpp.
  struct Node;
  const Node& node() const noexcept { return *node_; }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  explicit Expr(std::nullptr_t) {}
  std::shared_ptr<const Node> node_;
};

/// Parses the infix grammar documented in docs/expression-grammar.md.
/// Throws SyntaxError.
Expr parse(std::string_view text);

/// Throws UnboundVariable, or DomainError for log of a non-positive value,
/// division by zero, 0 to a negative power, a negative base with a
/// non-integer exponent, sqrt of a negative value, or any non-finite
/// intermediate.
double evaluate(const Expr& e, const Bindings& b);

/// Exact partial derivative. Only the rules 0*x -> 0, 1*x -> x, x+0 -> x and
/// exact constant folding are applied to the result. Throws NonDifferentiable
/// if `abs` occurs on a path that depends on `v`.
Expr differentiate(const Expr& e, Var v);

/// Canonical, fully parenthesized form. Constants carry 17 significant digits,
/// so parse(to_string(e)) evaluates identically to e.
std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

// Builders. These construct nodes verbatim without simplification.
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr atan(const Expr& a);
Expr sqrt(const Expr& a);
Expr abs(const Expr& a);
Expr pow(const Expr& base, double exponent);

inline Expr constant(double v) { return Expr::constant(v); }
inline const Expr& t_var() { static const Expr e = Expr::variable(Var::T); return e; }
inline const Expr& s_var() { static const Expr e = Expr::variable(Var::S); return e; }
inline const Expr& u_var() { static const Expr e = Expr::variable(Var::U); return e; }

}  // namespace volterra
