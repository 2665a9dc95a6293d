#include "codimred/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace codimred {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Sinh, Cosh, Exp };

struct Expression::Node {
  Op op;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr a = {}, NodePtr b = {}) {
  return std::make_shared<const Expression::Node>(Expression::Node{op, 0.0, 0, std::move(a), std::move(b)});
}

NodePtr number(double v) {
  return std::make_shared<const Expression::Node>(Expression::Node{Op::Const, v, 0, {}, {}});
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

// Light folding keeps derivative trees small.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make(Op::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return make(Op::Neg, std::move(b));
  return make(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return number(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make(Op::Mul, std::move(a), std::move(b));
}

double eval(const Expression::Node& n, const double* x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[n.var];
    case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
    case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
    case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
    case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
    case Op::Neg: return -eval(*n.a, x);
    case Op::Sin: return std::sin(eval(*n.a, x));
    case Op::Cos: return std::cos(eval(*n.a, x));
    case Op::Sinh: return std::sinh(eval(*n.a, x));
    case Op::Cosh: return std::cosh(eval(*n.a, x));
    case Op::Exp: return std::exp(eval(*n.a, x));
  }
  return 0.0;
}

NodePtr diff(const NodePtr& n, int i) {
  switch (n->op) {
    case Op::Const: return number(0.0);
    case Op::Var: return number(n->var == i ? 1.0 : 0.0);
    case Op::Add: return add(diff(n->a, i), diff(n->b, i));
    case Op::Sub: return sub(diff(n->a, i), diff(n->b, i));
    case Op::Mul: return add(mul(diff(n->a, i), n->b), mul(n->a, diff(n->b, i)));
    case Op::Div: {
      const NodePtr num = sub(mul(diff(n->a, i), n->b), mul(n->a, diff(n->b, i)));
      if (is_const(num, 0.0)) return num;
      return make(Op::Div, num, mul(n->b, n->b));
    }
    case Op::Neg: {
      const NodePtr d = diff(n->a, i);
      return is_const(d, 0.0) ? d : make(Op::Neg, d);
    }
    case Op::Sin: return mul(make(Op::Cos, n->a), diff(n->a, i));
    case Op::Cos: return mul(make(Op::Neg, make(Op::Sin, n->a)), diff(n->a, i));
    case Op::Sinh: return mul(make(Op::Cosh, n->a), diff(n->a, i));
    case Op::Cosh: return mul(make(Op::Sinh, n->a), diff(n->a, i));
    case Op::Exp: return mul(n, diff(n->a, i));
  }
  return number(0.0);
}

void print(const Expression::Node& n, const std::vector<std::string>& names, std::ostream& os) {
  auto fn = [&](const char* name) {
    os << name << "(";
    print(*n.a, names, os);
    os << ")";
  };
  auto bin = [&](const char* op) {
    os << "(";
    print(*n.a, names, os);
    os << " " << op << " ";
    print(*n.b, names, os);
    os << ")";
  };
  switch (n.op) {
    case Op::Const: os << n.value; break;
    case Op::Var: os << names[static_cast<std::size_t>(n.var)]; break;
    case Op::Add: bin("+"); break;
    case Op::Sub: bin("-"); break;
    case Op::Mul: bin("*"); break;
    case Op::Div: bin("/"); break;
    case Op::Neg:
      os << "-";
      print(*n.a, names, os);
      break;
    case Op::Sin: fn("sin"); break;
    case Op::Cos: fn("cos"); break;
    case Op::Sinh: fn("sinh"); break;
    case Op::Cosh: fn("cosh"); break;
    case Op::Exp: fn("exp"); break;
  }
}

// expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
// unary := '-' unary | '+' unary | primary; primary := number | name | name '(' expr ')' | '(' expr ')'
class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  NodePtr run() {
    NodePtr n = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression \"" << s_ << "\", column " << pos_ + 1 << ": " << msg;
    throw ExpressionError(os.str(), static_cast<int>(pos_) + 1);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
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
      if (eat('+')) {
        n = make(Op::Add, n, term());
      } else if (eat('-')) {
        n = make(Op::Sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) {
        n = make(Op::Mul, n, unary());
      } else if (eat('/')) {
        n = make(Op::Div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          return std::make_shared<const Expression::Node>(Expression::Node{Op::Var, 0.0, static_cast<int>(i), {}, {}});
        }
      }
      if (name == "pi") return number(std::numbers::pi);
      static const std::pair<const char*, Op> fns[] = {
          {"sin", Op::Sin}, {"cos", Op::Cos}, {"sinh", Op::Sinh}, {"cosh", Op::Cosh}, {"exp", Op::Exp}};
      for (const auto& [fname, op] : fns) {
        if (name == fname) {
          if (!eat('(')) fail("expected '(' after " + name);
          NodePtr arg = expr();
          if (!eat(')')) fail("expected ')'");
          return make(op, arg);
        }
      }
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
  return Expression(Parser(text, variables).run(), variables);
}

Expression Expression::constant(double c) { return Expression(number(c), {}); }

double Expression::operator()(const Vec& x) const {
  if (!root_) throw Error("expression: empty");
  if (x.size() < arity()) throw DimensionError("expression: too few arguments");
  return eval(*root_, x.data());
}

double Expression::operator()(double x) const {
  if (!root_) throw Error("expression: empty");
  if (arity() > 1) throw DimensionError("expression: too few arguments");
  return eval(*root_, &x);
}

Expression Expression::derivative(int i) const {
  if (!root_) throw Error("expression: empty");
  if (i < 0 || i >= arity()) throw DimensionError("expression: derivative index out of range");
  return Expression(diff(root_, i), names_);
}

std::string Expression::str() const {
  if (!root_) return "";
  std::ostringstream os;
  os.precision(17);
  print(*root_, names_, os);
  return os.str();
}

}  // namespace codimred
