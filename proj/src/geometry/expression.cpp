#include "vem/expression.hpp"

#include "vem/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace vem {

struct Expression::Node {
  enum class Kind { number, variable, negate, add, sub, mul, div, pow, call };
  Kind kind = Kind::number;
  double value = 0.0;
  int variable = 0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(const double* vars) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::variable: return vars[variable];
      case Kind::negate: return -lhs->eval(vars);
      case Kind::add: return lhs->eval(vars) + rhs->eval(vars);
      case Kind::sub: return lhs->eval(vars) - rhs->eval(vars);
      case Kind::mul: return lhs->eval(vars) * rhs->eval(vars);
      case Kind::div: return lhs->eval(vars) / rhs->eval(vars);
      case Kind::pow: return std::pow(lhs->eval(vars), rhs->eval(vars));
      case Kind::call: return fn(lhs->eval(vars));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

double fn_sin(double v) { return std::sin(v); }
double fn_cos(double v) { return std::cos(v); }
double fn_tan(double v) { return std::tan(v); }
double fn_exp(double v) { return std::exp(v); }
double fn_log(double v) { return std::log(v); }
double fn_sqrt(double v) { return std::sqrt(v); }
double fn_abs(double v) { return std::abs(v); }
double fn_tanh(double v) { return std::tanh(v); }

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, 1, static_cast<int>(pos_) + 1);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = make(Kind::add, n, term());
      } else if (accept('-')) {
        n = make(Kind::sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = make(Kind::mul, n, unary());
      } else if (accept('/')) {
        n = make(Kind::div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::negate, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string id = s_.substr(start, pos_ - start);
      auto n = std::make_shared<Expression::Node>();
      if (id == "x" || id == "y" || id == "z" || id == "t") {
        n->kind = Kind::variable;
        n->variable = id == "x" ? 0 : id == "y" ? 1 : id == "z" ? 2 : 3;
        return n;
      }
      if (id == "pi") {
        n->value = std::numbers::pi;
        return n;
      }
      static const std::pair<const char*, double (*)(double)> fns[] = {
          {"sin", fn_sin},   {"cos", fn_cos}, {"tan", fn_tan}, {"exp", fn_exp},
          {"log", fn_log},   {"sqrt", fn_sqrt}, {"abs", fn_abs}, {"tanh", fn_tanh}};
      for (const auto& [name, f] : fns) {
        if (id == name) {
          if (!accept('(')) fail("expected '(' after " + id);
          n->kind = Kind::call;
          n->fn = f;
          n->lhs = expr();
          if (!accept(')')) fail("expected ')'");
          return n;
        }
      }
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text), root_(Parser(text).parse()) {}
Expression::~Expression() = default;
Expression::Expression(const Expression&) = default;
Expression& Expression::operator=(const Expression&) = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

double Expression::operator()(double x, double y, double z, double t) const {
  const double vars[4] = {x, y, z, t};
  return root_->eval(vars);
}

}  // namespace vem
