#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace volterra {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is the 0-based byte offset.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message)
      : Error("syntax error at position " + std::to_string(position) + ": " + message),
        position_(position),
        detail_(message) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t position_;
  std::string detail_;
};

class UnboundVariable : public Error {
 public:
  explicit UnboundVariable(char name)
      : Error(std::string("unbound variable '") + name + "'"), name_(name) {}
  char name() const noexcept { return name_; }

 private:
  char name_;
};

/// Evaluation left the real domain. `node` is the printed offending subexpression.
class DomainError : public Error {
 public:
  enum class Kind { LogNonPositive, DivisionByZero, ZeroToNegative, NegativeBase, SqrtNegative, NonFinite };

  DomainError(Kind kind, std::string node, const std::string& message)
      : Error(message + " in " + node), kind_(kind), node_(std::move(node)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& node() const noexcept { return node_; }

 private:
  Kind kind_;
  std::string node_;
};

class NonDifferentiable : public Error {
 public:
  using Error::Error;
};

/// An expression mentions a variable outside its permitted set.
class VariableScopeError : public Error {
 public:
  using Error::Error;
};

class InvalidMu : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& message, double last_difference)
      : Error(message), last_difference_(last_difference) {}
  double last_difference() const noexcept { return last_difference_; }

 private:
  double last_difference_;
};

/// A caller broke a documented precondition (bad grid, non-positive tolerance, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace volterra
