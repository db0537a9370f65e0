#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace wpsim {

/// Malformed expression text; `position` is the offending character offset.
class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& what, std::size_t position_)
      : std::invalid_argument(what + " at position " + std::to_string(position_)), position(position_) {}
  std::size_t position;
};

/// Small arithmetic expression over (t, x, y).
///
/// Grammar: numbers, `pi`, the variables t, x, y, binary + - * / ^, unary -,
/// parentheses and the functions sin, cos, exp, log, abs, sqrt. Expressions can be
/// differentiated symbolically.
class Expression {
 public:
  Expression();  // zero
  static Expression parse(const std::string& text);
  static Expression constant(double value);
  static Expression variable(char name);

  double operator()(double t, double x, double y = 0) const;
  Expression derivative(char var) const;
  std::string to_string() const;
  /// True when no variable occurs.
  bool is_constant() const;
  /// Exact value when is_constant().
  double constant_value() const;

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression pow(const Expression& a, const Expression& b);
  friend Expression sin(const Expression& a);
  friend Expression cos(const Expression& a);
  friend Expression exp(const Expression& a);
  friend Expression log(const Expression& a);
  friend Expression abs(const Expression& a);
  friend Expression sqrt(const Expression& a);

  struct Node;

 private:
  explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace wpsim
