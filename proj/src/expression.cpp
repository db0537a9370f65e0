#include "wpsim/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace wpsim {

struct Expression::Node {
  enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Abs, Sqrt };
  Op op;
  double value = 0;
  char var = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using Op = Expression::Node::Op;
using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr num(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::Num;
  n->value = v;
  return n;
}

bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

// Builders fold constants and drop neutral elements so derivatives stay small.
NodePtr make(Op op, NodePtr a, NodePtr b = nullptr) {
  if (a->op == Op::Num && (!b || b->op == Op::Num)) {
    const double x = a->value, y = b ? b->value : 0;
    switch (op) {
      case Op::Add: return num(x + y);
      case Op::Sub: return num(x - y);
      case Op::Mul: return num(x * y);
      case Op::Div: if (y != 0) return num(x / y); break;
      case Op::Pow: return num(std::pow(x, y));
      case Op::Neg: return num(-x);
      case Op::Sin: return num(std::sin(x));
      case Op::Cos: return num(std::cos(x));
      case Op::Exp: return num(std::exp(x));
      case Op::Log: if (x > 0) return num(std::log(x)); break;
      case Op::Abs: return num(std::abs(x));
      case Op::Sqrt: if (x >= 0) return num(std::sqrt(x)); break;
      default: break;
    }
  }
  switch (op) {
    case Op::Add:
      if (is_num(a, 0)) return b;
      if (is_num(b, 0)) return a;
      break;
    case Op::Sub:
      if (is_num(b, 0)) return a;
      if (is_num(a, 0)) return make(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_num(a, 0) || is_num(b, 0)) return num(0);
      if (is_num(a, 1)) return b;
      if (is_num(b, 1)) return a;
      break;
    case Op::Div:
      if (is_num(a, 0)) return num(0);
      if (is_num(b, 1)) return a;
      break;
    case Op::Pow:
      if (is_num(b, 0)) return num(1);
      if (is_num(b, 1)) return a;
      break;
    case Op::Neg:
      if (a->op == Op::Neg) return a->a;
      break;
    default: break;
  }
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double eval(const Expression::Node& n, double t, double x, double y) {
  switch (n.op) {
    case Op::Num: return n.value;
    case Op::Var: return n.var == 't' ? t : n.var == 'x' ? x : y;
    case Op::Add: return eval(*n.a, t, x, y) + eval(*n.b, t, x, y);
    case Op::Sub: return eval(*n.a, t, x, y) - eval(*n.b, t, x, y);
    case Op::Mul: return eval(*n.a, t, x, y) * eval(*n.b, t, x, y);
    case Op::Div: return eval(*n.a, t, x, y) / eval(*n.b, t, x, y);
    case Op::Pow: return std::pow(eval(*n.a, t, x, y), eval(*n.b, t, x, y));
    case Op::Neg: return -eval(*n.a, t, x, y);
    case Op::Sin: return std::sin(eval(*n.a, t, x, y));
    case Op::Cos: return std::cos(eval(*n.a, t, x, y));
    case Op::Exp: return std::exp(eval(*n.a, t, x, y));
    case Op::Log: return std::log(eval(*n.a, t, x, y));
    case Op::Abs: return std::abs(eval(*n.a, t, x, y));
    case Op::Sqrt: return std::sqrt(eval(*n.a, t, x, y));
  }
  return 0;
}

bool has_var(const NodePtr& n) {
  if (!n) return false;
  if (n->op == Op::Var) return true;
  return has_var(n->a) || has_var(n->b);
}

NodePtr diff(const NodePtr& n, char v) {
  switch (n->op) {
    case Op::Num: return num(0);
    case Op::Var: return num(n->var == v ? 1 : 0);
    case Op::Add: return make(Op::Add, diff(n->a, v), diff(n->b, v));
    case Op::Sub: return make(Op::Sub, diff(n->a, v), diff(n->b, v));
    case Op::Mul:
      return make(Op::Add, make(Op::Mul, diff(n->a, v), n->b), make(Op::Mul, n->a, diff(n->b, v)));
    case Op::Div:
      return make(Op::Div, make(Op::Sub, make(Op::Mul, diff(n->a, v), n->b), make(Op::Mul, n->a, diff(n->b, v))),
                  make(Op::Mul, n->b, n->b));
    case Op::Pow:
      if (!has_var(n->b)) {
        // d(f^c) = c f^(c-1) f'
        return make(Op::Mul, make(Op::Mul, n->b, make(Op::Pow, n->a, make(Op::Sub, n->b, num(1)))), diff(n->a, v));
      }
      // d(f^g) = f^g (g' log f + g f'/f)
      return make(Op::Mul, n,
                  make(Op::Add, make(Op::Mul, diff(n->b, v), make(Op::Log, n->a)),
                       make(Op::Div, make(Op::Mul, n->b, diff(n->a, v)), n->a)));
    case Op::Neg: return make(Op::Neg, diff(n->a, v));
    case Op::Sin: return make(Op::Mul, make(Op::Cos, n->a), diff(n->a, v));
    case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, n->a), diff(n->a, v)));
    case Op::Exp: return make(Op::Mul, n, diff(n->a, v));
    case Op::Log: return make(Op::Div, diff(n->a, v), n->a);
    case Op::Abs: return make(Op::Mul, make(Op::Div, n->a, n), diff(n->a, v));  // undefined at 0
    case Op::Sqrt: return make(Op::Div, diff(n->a, v), make(Op::Mul, num(2), n));
  }
  return num(0);
}

void print(const Expression::Node& n, std::ostringstream& os) {
  auto fn = [&](const char* name) {
    os << name << '(';
    print(*n.a, os);
    os << ')';
  };
  auto bin = [&](char c) {
    os << '(';
    print(*n.a, os);
    os << ' ' << c << ' ';
    print(*n.b, os);
    os << ')';
  };
  switch (n.op) {
    case Op::Num: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n.value;
      if (n.value < 0)
        os << '(' << tmp.str() << ')';
      else
        os << tmp.str();
      break;
    }
    case Op::Var: os << n.var; break;
    case Op::Add: bin('+'); break;
    case Op::Sub: bin('-'); break;
    case Op::Mul: bin('*'); break;
    case Op::Div: bin('/'); break;
    case Op::Pow: bin('^'); break;
    case Op::Neg: os << "(-"; print(*n.a, os); os << ')'; break;
    case Op::Sin: fn("sin"); break;
    case Op::Cos: fn("cos"); break;
    case Op::Exp: fn("exp"); break;
    case Op::Log: fn("log"); break;
    case Op::Abs: fn("abs"); break;
    case Op::Sqrt: fn("sqrt"); break;
  }
}

// Recursive descent:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) throw ExpressionError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    return e;
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

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make(Op::Add, lhs, term());
      else if (accept('-'))
        lhs = make(Op::Sub, lhs, term());
      else
        return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = make(Op::Mul, lhs, unary());
      else if (accept('/'))
        lhs = make(Op::Div, lhs, unary());
      else
        return lhs;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Op::Pow, base, unary());
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) throw ExpressionError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ExpressionError("malformed number", pos_);
      pos_ += static_cast<std::size_t>(end - begin);
      return num(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "pi") return num(std::numbers::pi);
      if (name == "t" || name == "x" || name == "y") {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Var;
        n->var = name[0];
        return n;
      }
      Op op;
      if (name == "sin")
        op = Op::Sin;
      else if (name == "cos")
        op = Op::Cos;
      else if (name == "exp")
        op = Op::Exp;
      else if (name == "log")
        op = Op::Log;
      else if (name == "abs")
        op = Op::Abs;
      else if (name == "sqrt")
        op = Op::Sqrt;
      else
        throw ExpressionError("unknown name '" + name + "'", start);
      if (!accept('(')) throw ExpressionError("expected '(' after " + name, pos_);
      NodePtr arg = expr();
      if (!accept(')')) throw ExpressionError("expected ')'", pos_);
      return make(op, arg);
    }
    throw ExpressionError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : node_(num(0)) {}

Expression Expression::parse(const std::string& text) { return Expression(Parser(text).parse()); }
Expression Expression::constant(double value) { return Expression(num(value)); }
Expression Expression::variable(char name) {
  if (name != 't' && name != 'x' && name != 'y') throw std::invalid_argument("variables are t, x and y");
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = name;
  return Expression(n);
}

double Expression::operator()(double t, double x, double y) const { return eval(*node_, t, x, y); }
Expression Expression::derivative(char var) const { return Expression(diff(node_, var)); }
bool Expression::is_constant() const { return !has_var(node_); }
double Expression::constant_value() const { return eval(*node_, 0, 0, 0); }

std::string Expression::to_string() const {
  std::ostringstream os;
  print(*node_, os);
  return os.str();
}

Expression operator+(const Expression& a, const Expression& b) { return Expression(make(Op::Add, a.node_, b.node_)); }
Expression operator-(const Expression& a, const Expression& b) { return Expression(make(Op::Sub, a.node_, b.node_)); }
Expression operator*(const Expression& a, const Expression& b) { return Expression(make(Op::Mul, a.node_, b.node_)); }
Expression operator/(const Expression& a, const Expression& b) { return Expression(make(Op::Div, a.node_, b.node_)); }
Expression operator-(const Expression& a) { return Expression(make(Op::Neg, a.node_)); }
Expression pow(const Expression& a, const Expression& b) { return Expression(make(Op::Pow, a.node_, b.node_)); }
Expression sin(const Expression& a) { return Expression(make(Op::Sin, a.node_)); }
Expression cos(const Expression& a) { return Expression(make(Op::Cos, a.node_)); }
Expression exp(const Expression& a) { return Expression(make(Op::Exp, a.node_)); }
Expression log(const Expression& a) { return Expression(make(Op::Log, a.node_)); }
Expression abs(const Expression& a) { return Expression(make(Op::Abs, a.node_)); }
Expression sqrt(const Expression& a) { return Expression(make(Op::Sqrt, a.node_)); }

}  // namespace wpsim
