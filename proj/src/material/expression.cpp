#include "platelab/material/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "platelab/core/errors.hpp"
#include "platelab/core/keyvalue.hpp"

namespace platelab::material {

enum class Op { constant, variable, add, sub, mul, div, neg, pow, sin, cos, exp };

struct Expression::Node {
  Op op = Op::constant;
  double value = 0.0;  // constant value, or exponent for pow
  int var = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {
using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::constant; }

NodePtr make(Op op, NodePtr a, NodePtr b = nullptr, double value = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->value = value;
  return n;
}

double eval(const NodePtr& n, double x1, double x2) {
  switch (n->op) {
    case Op::constant: return n->value;
    case Op::variable: return n->var == 0 ? x1 : x2;
    case Op::add: return eval(n->a, x1, x2) + eval(n->b, x1, x2);
    case Op::sub: return eval(n->a, x1, x2) - eval(n->b, x1, x2);
    case Op::mul: return eval(n->a, x1, x2) * eval(n->b, x1, x2);
    case Op::div: return eval(n->a, x1, x2) / eval(n->b, x1, x2);
    case Op::neg: return -eval(n->a, x1, x2);
    case Op::pow: return std::pow(eval(n->a, x1, x2), n->value);
    case Op::sin: return std::sin(eval(n->a, x1, x2));
    case Op::cos: return std::cos(eval(n->a, x1, x2));
    case Op::exp: return std::exp(eval(n->a, x1, x2));
  }
  return 0.0;
}

// Constructors with constant folding and identity elimination.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make(Op::add, a, b);
}
NodePtr neg(NodePtr a) {
  if (is_const(a)) return make_const(-a->value);
  if (a->op == Op::neg) return a->a;
  return make(Op::neg, a);
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(b);
  return make(Op::sub, a, b);
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return neg(b);
  if (is_const(b, -1.0)) return neg(a);
  return make(Op::mul, a, b);
}
NodePtr divide(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return make_const(a->value / b->value);
  if (is_const(a, 0.0)) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  return make(Op::div, a, b);
}
NodePtr power(NodePtr a, double p) {
  if (p == 0.0) return make_const(1.0);
  if (p == 1.0) return a;
  if (is_const(a)) return make_const(std::pow(a->value, p));
  return make(Op::pow, a, nullptr, p);
}
NodePtr unary(Op op, NodePtr a) {
  if (is_const(a)) {
    const double v = a->value;
    return make_const(op == Op::sin ? std::sin(v) : op == Op::cos ? std::cos(v) : std::exp(v));
  }
  return make(op, a);
}

NodePtr diff(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::constant: return make_const(0.0);
    case Op::variable: return make_const(n->var == var ? 1.0 : 0.0);
    case Op::add: return add(diff(n->a, var), diff(n->b, var));
    case Op::sub: return sub(diff(n->a, var), diff(n->b, var));
    case Op::mul: return add(mul(diff(n->a, var), n->b), mul(n->a, diff(n->b, var)));
    case Op::div: {
      // (a/b)' = a'/b - a b'/b^2
      return sub(divide(diff(n->a, var), n->b), divide(mul(n->a, diff(n->b, var)), power(n->b, 2.0)));
    }
    case Op::neg: return neg(diff(n->a, var));
    case Op::pow: return mul(mul(make_const(n->value), power(n->a, n->value - 1.0)), diff(n->a, var));
    case Op::sin: return mul(unary(Op::cos, n->a), diff(n->a, var));
    case Op::cos: return neg(mul(unary(Op::sin, n->a), diff(n->a, var)));
    case Op::exp: return mul(n, diff(n->a, var));
  }
  return make_const(0.0);
}

void print(const NodePtr& n, std::ostream& out) {
  switch (n->op) {
    case Op::constant:
      if (n->value < 0) out << "(" << format_double(n->value) << ")";
      else out << format_double(n->value);
      return;
    case Op::variable: out << (n->var == 0 ? "x1" : "x2"); return;
    case Op::add: out << "("; print(n->a, out); out << " + "; print(n->b, out); out << ")"; return;
    case Op::sub: out << "("; print(n->a, out); out << " - "; print(n->b, out); out << ")"; return;
    case Op::mul: out << "("; print(n->a, out); out << " * "; print(n->b, out); out << ")"; return;
    case Op::div: out << "("; print(n->a, out); out << " / "; print(n->b, out); out << ")"; return;
    case Op::neg: out << "(-"; print(n->a, out); out << ")"; return;
    case Op::pow: out << "("; print(n->a, out); out << "^(" << format_double(n->value) << "))"; return;
    case Op::sin: out << "sin("; print(n->a, out); out << ")"; return;
    case Op::cos: out << "cos("; print(n->a, out); out << ")"; return;
    case Op::exp: out << "exp("; print(n->a, out); out << ")"; return;
  }
}

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
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
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression '" + s_ + "': " + msg + " at position " + std::to_string(pos_));
  }

  NodePtr expr() {
    auto n = term();
    while (true) {
      if (accept('+')) n = add(n, term());
      else if (accept('-')) n = sub(n, term());
      else return n;
    }
  }
  NodePtr term() {
    auto n = factor();
    while (true) {
      if (accept('*')) n = mul(n, factor());
      else if (accept('/')) n = divide(n, factor());
      else return n;
    }
  }
  NodePtr factor() {
    if (accept('-')) return neg(factor());
    if (accept('+')) return factor();
    auto base = atom();
    if (accept('^')) {
      const auto e = factor();
      if (!is_const(e)) fail("exponent must be constant");
      return power(base, e->value);
    }
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (accept('(')) {
      auto n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t b = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(b, pos_ - b);
      if (name == "x1" || name == "x2") {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::variable;
        n->var = name == "x1" ? 0 : 1;
        return n;
      }
      if (name == "pi") return make_const(std::numbers::pi);
      if (name == "e") return make_const(std::numbers::e);
      Op op;
      if (name == "sin") op = Op::sin;
      else if (name == "cos") op = Op::cos;
      else if (name == "exp") op = Op::exp;
      else fail("unknown identifier '" + name + "'");
      if (!accept('(')) fail("expected '(' after " + name);
      auto arg = expr();
      if (!accept(')')) fail("expected ')'");
      return unary(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string s_;
  std::size_t pos_ = 0;
};
}  // namespace

Expression::Expression() : root_(make_const(0.0)) {}

Expression Expression::parse(const std::string& text) { return Expression(Parser(text).parse()); }

Expression Expression::constant(double value) { return Expression(make_const(value)); }

Expression Expression::variable(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->var = index;
  return Expression(n);
}

double Expression::evaluate(double x1, double x2) const { return eval(root_, x1, x2); }

Expression Expression::derivative(int var) const { return Expression(diff(root_, var)); }

bool Expression::is_constant() const { return root_->op == Op::constant; }

std::string Expression::to_string() const {
  std::ostringstream out;
  print(root_, out);
  return out.str();
}

}  // namespace platelab::material
