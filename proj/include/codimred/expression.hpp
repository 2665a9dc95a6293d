#pragma once

#include "codimred/geomcore.hpp"

#include <memory>
#include <string>
#include <vector>

namespace codimred {

/// Raised for malformed expressions; `column` is 1-based.
class ExpressionError : public Error {
 public:
  ExpressionError(const std::string& what, int column) : Error(what), column_(column) {}
  [[nodiscard]] int column() const { return column_; }

 private:
  int column_;
};

/// Real expression in named variables: numbers, `pi`, + - * /, unary minus,
/// parentheses and sin, cos, sinh, cosh, exp.
class Expression {
 public:
  struct Node;

  Expression() = default;

  [[nodiscard]] static Expression parse(const std::string& text, const std::vector<std::string>& variables);
  [[nodiscard]] static Expression constant(double c);

  [[nodiscard]] double operator()(const Vec& x) const;
  [[nodiscard]] double operator()(double x) const;
  /// Symbolic partial derivative in variable i.
  [[nodiscard]] Expression derivative(int i) const;
  [[nodiscard]] std::string str() const;
  [[nodiscard]] int arity() const { return static_cast<int>(names_.size()); }

 private:
  Expression(std::shared_ptr<const Node> root, std::vector<std::string> names)
      : root_(std::move(root)), names_(std::move(names)) {}

  std::shared_ptr<const Node> root_;
  std::vector<std::string> names_;
};

}  // namespace codimred
