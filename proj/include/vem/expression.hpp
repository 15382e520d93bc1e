#pragma once

#include <memory>
#include <string>

namespace vem {

/// Small arithmetic expression over the variables x, y, z, t.
///
/// Grammar: + - * / ^, unary minus, parentheses, numeric literals, the
/// constant pi, and the functions sin cos tan exp log sqrt abs tanh.
class Expression {
 public:
  /// Throws ParseError (column is 1-based within `text`, line is 1).
  explicit Expression(const std::string& text);
  ~Expression();
  Expression(const Expression&);
  Expression& operator=(const Expression&);
  Expression(Expression&&) noexcept;
  Expression& operator=(Expression&&) noexcept;

  double operator()(double x, double y, double z, double t) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace vem
