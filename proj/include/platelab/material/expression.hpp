#pragma once

#include <memory>
#include <string>

namespace platelab::material {

// Closed-form scalar field of (x1, x2) built from numbers, pi, e, x1, x2,
// + - * / ^ (constant exponent), sin, cos, exp. Supports symbolic
// differentiation.
class Expression {
 public:
  Expression();
  static Expression parse(const std::string& text);
  static Expression constant(double value);
  static Expression variable(int index);

  double evaluate(double x1, double x2) const;
  // Partial derivative with respect to x1 (var = 0) or x2 (var = 1).
  Expression derivative(int var) const;
  bool is_constant() const;
  std::string to_string() const;

  struct Node;

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace platelab::material
