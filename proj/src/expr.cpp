#include "obata/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "obata/errors.hpp"

namespace obata {

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_constant(double v, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->op = Op::constant;
  n->value = v;
  n->position = pos;
  return n;
}

NodePtr make_variable(int index, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->index = index;
  n->position = pos;
  n->has_variables = true;
  return n;
}

NodePtr make_unary(Op op, NodePtr a, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->position = pos;
  n->has_variables = a->has_variables;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b, std::size_t pos = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->position = pos;
  n->has_variables = a->has_variables || b->has_variables;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

struct FunctionName {
  std::string_view name;
  Op op;
};

constexpr FunctionName kFunctions[] = {
    {"sin", Op::sin},   {"cos", Op::cos},   {"sinh", Op::sinh},
    {"cosh", Op::cosh}, {"tanh", Op::tanh}, {"exp", Op::exp},
    {"ln", Op::ln},     {"sqrt", Op::sqrt}, {"abs", Op::abs},
    {"arcsin", Op::arcsin},
};

std::string_view op_name(Op op) {
  for (const auto& f : kFunctions) {
    if (f.op == op) return f.name;
  }
  switch (op) {
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::pow: return "^";
    case Op::neg: return "-";
    default: return "?";
  }
}

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  NodePtr parse() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    NodePtr root = sum();
    skip_space();
    if (pos_ < text_.size()) {
      throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    }
    return root;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    NodePtr lhs = product();
    for (;;) {
      skip_space();
      std::size_t at = pos_;
      if (accept('+')) {
        lhs = make_binary(Op::add, lhs, product(), at);
      } else if (accept('-')) {
        lhs = make_binary(Op::sub, lhs, product(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    for (;;) {
      skip_space();
      std::size_t at = pos_;
      if (accept('*')) {
        lhs = make_binary(Op::mul, lhs, unary(), at);
      } else if (accept('/')) {
        lhs = make_binary(Op::div, lhs, unary(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    skip_space();
    std::size_t at = pos_;
    if (accept('-')) return make_unary(Op::neg, unary(), at);
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_space();
    std::size_t at = pos_;
    if (accept('^')) return make_binary(Op::pow, base, unary(), at);
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const std::size_t at = pos_;
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = sum();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) ++end;
      std::string_view ident = text_.substr(pos_, end - pos_);
      pos_ = end;
      if (ident == "t") return variable(0, at);
      if (ident == "pi") return make_constant(std::numbers::pi, at);
      if (ident.size() > 1 && ident[0] == 'x' && all_digits(ident.substr(1))) {
        int index = 0;
        auto [ptr, ec] = std::from_chars(ident.data() + 1, ident.data() + ident.size(), index);
        if (ec != std::errc()) throw ParseError("bad variable index", at);
        return variable(index, at);
      }
      for (const auto& f : kFunctions) {
        if (f.name == ident) {
          if (!accept('(')) throw ParseError("expected '(' after " + std::string(ident), pos_);
          NodePtr arg = sum();
          if (!accept(')')) throw ParseError("expected ')'", pos_);
          return make_unary(f.op, arg, at);
        }
      }
      throw ParseError("unknown identifier '" + std::string(ident) + "'", at);
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", at);
  }

  static bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char ch : s) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    }
    return true;
  }

  NodePtr variable(int index, std::size_t at) {
    if (index < 0 || index >= dim_) {
      throw ParseError("variable x" + std::to_string(index) + " out of range for dimension " +
                           std::to_string(dim_),
                       at);
    }
    return make_variable(index, at);
  }

  NodePtr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
    };
    digits();
    if (end < text_.size() && text_[end] == '.') {
      ++end;
      digits();
    }
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t exp_at = end + 1;
      if (exp_at < text_.size() && (text_[exp_at] == '+' || text_[exp_at] == '-')) ++exp_at;
      if (exp_at < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp_at]))) {
        end = exp_at;
        digits();
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + at, text_.data() + end, v);
    if (ec != std::errc() || ptr != text_.data() + end) throw ParseError("malformed number", at);
    pos_ = end;
    return make_constant(v, at);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  if (!std::isfinite(v)) throw Error("cannot print non-finite constant");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void print_node(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::constant:
      if (std::signbit(n.value)) {
        out += "(-";
        out += format_number(-n.value);
        out += ')';
      } else {
        out += format_number(n.value);
      }
      return;
    case Op::variable:
      out += 'x';
      out += std::to_string(n.index);
      return;
    case Op::neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
      out += '(';
      print_node(*n.lhs, out);
      out += ' ';
      out += op_name(n.op);
      out += ' ';
      print_node(*n.rhs, out);
      out += ')';
      return;
    default:
      out += op_name(n.op);
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
  }
}

[[noreturn]] void domain_error(const Node& n, const std::string& what) {
  throw DomainError(what + " in '" + std::string(op_name(n.op)) + "' at position " +
                    std::to_string(n.position));
}

bool is_small_integer(double c) { return c == std::round(c) && std::fabs(c) <= 64.0; }

double eval_node(const Node& n, const Vec& p) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return p[n.index];
    case Op::add: return eval_node(*n.lhs, p) + eval_node(*n.rhs, p);
    case Op::sub: return eval_node(*n.lhs, p) - eval_node(*n.rhs, p);
    case Op::mul: return eval_node(*n.lhs, p) * eval_node(*n.rhs, p);
    case Op::div: {
      double b = eval_node(*n.rhs, p);
      if (b == 0.0) domain_error(n, "division by zero");
      return eval_node(*n.lhs, p) / b;
    }
    case Op::pow: {
      double a = eval_node(*n.lhs, p);
      double b = eval_node(*n.rhs, p);
      if (!n.rhs->has_variables && is_small_integer(b)) {
        if (a == 0.0 && b < 0.0) domain_error(n, "zero to a negative power");
        return std::pow(a, b);
      }
      if (a <= 0.0) domain_error(n, "nonpositive base with non-integer exponent");
      return std::pow(a, b);
    }
    case Op::neg: return -eval_node(*n.lhs, p);
    default: break;
  }
  const double u = eval_node(*n.lhs, p);
  switch (n.op) {
    case Op::sin: return std::sin(u);
    case Op::cos: return std::cos(u);
    case Op::sinh: return std::sinh(u);
    case Op::cosh: return std::cosh(u);
    case Op::tanh: return std::tanh(u);
    case Op::exp: return std::exp(u);
    case Op::ln:
      if (u <= 0.0) domain_error(n, "logarithm of nonpositive value");
      return std::log(u);
    case Op::sqrt:
      if (u < 0.0) domain_error(n, "square root of negative value");
      return std::sqrt(u);
    case Op::abs: return std::fabs(u);
    case Op::arcsin:
      if (u < -1.0 || u > 1.0) domain_error(n, "arcsin argument outside [-1,1]");
      return std::asin(u);
    default: break;
  }
  domain_error(n, "unknown node");
}

Jet2 jet_node(const Node& n, const Vec& p) {
  const int dim = static_cast<int>(p.size());
  switch (n.op) {
    case Op::constant: return Jet2::constant(n.value, dim);
    case Op::variable: return Jet2::variable(n.index, p[n.index], dim);
    case Op::add: return jet_node(*n.lhs, p) + jet_node(*n.rhs, p);
    case Op::sub: return jet_node(*n.lhs, p) - jet_node(*n.rhs, p);
    case Op::mul: return jet_node(*n.lhs, p) * jet_node(*n.rhs, p);
    case Op::div: {
      Jet2 b = jet_node(*n.rhs, p);
      if (b.value == 0.0) domain_error(n, "division by zero");
      return jet_node(*n.lhs, p) / b;
    }
    case Op::pow: {
      Jet2 a = jet_node(*n.lhs, p);
      if (!n.rhs->has_variables) {
        const double c = eval_node(*n.rhs, p);
        if (c == 0.0) return Jet2::constant(1.0, dim);
        if (c == 1.0) return a;
        if (is_small_integer(c)) {
          if (a.value == 0.0 && c < 2.0) domain_error(n, "zero base with exponent below 2");
          return chain(a, std::pow(a.value, c), c * std::pow(a.value, c - 1.0),
                       c * (c - 1.0) * std::pow(a.value, c - 2.0));
        }
        if (a.value <= 0.0) domain_error(n, "nonpositive base with non-integer exponent");
        return chain(a, std::pow(a.value, c), c * std::pow(a.value, c - 1.0),
                     c * (c - 1.0) * std::pow(a.value, c - 2.0));
      }
      if (a.value <= 0.0) domain_error(n, "nonpositive base with variable exponent");
      const double la = std::log(a.value);
      Jet2 ln_a = chain(a, la, 1.0 / a.value, -1.0 / (a.value * a.value));
      Jet2 e = jet_node(*n.rhs, p) * ln_a;
      const double v = std::exp(e.value);
      return chain(e, v, v, v);
    }
    case Op::neg: return -jet_node(*n.lhs, p);
    default: break;
  }
  const Jet2 u = jet_node(*n.lhs, p);
  const double x = u.value;
  switch (n.op) {
    case Op::sin: return chain(u, std::sin(x), std::cos(x), -std::sin(x));
    case Op::cos: return chain(u, std::cos(x), -std::sin(x), -std::cos(x));
    case Op::sinh: return chain(u, std::sinh(x), std::cosh(x), std::sinh(x));
    case Op::cosh: return chain(u, std::cosh(x), std::sinh(x), std::cosh(x));
    case Op::tanh: {
      const double th = std::tanh(x);
      const double s2 = 1.0 - th * th;
      return chain(u, th, s2, -2.0 * th * s2);
    }
    case Op::exp: {
      const double e = std::exp(x);
      return chain(u, e, e, e);
    }
    case Op::ln:
      if (x <= 0.0) domain_error(n, "logarithm of nonpositive value");
      return chain(u, std::log(x), 1.0 / x, -1.0 / (x * x));
    case Op::sqrt: {
      if (x <= 0.0) domain_error(n, "square root of nonpositive value");
      const double r = std::sqrt(x);
      return chain(u, r, 0.5 / r, -0.25 / (r * x));
    }
    case Op::abs:
      if (x == 0.0) domain_error(n, "abs is not differentiable at 0");
      return chain(u, std::fabs(x), x > 0.0 ? 1.0 : -1.0, 0.0);
    case Op::arcsin: {
      if (x <= -1.0 || x >= 1.0) domain_error(n, "arcsin argument outside (-1,1)");
      const double q = 1.0 - x * x;
      const double r = std::sqrt(q);
      return chain(u, std::asin(x), 1.0 / r, x / (q * r));
    }
    default: break;
  }
  domain_error(n, "unknown node");
}

void check_dim(const Expression& e, const Vec& p) {
  if (!e.valid()) throw Error("evaluation of an empty expression");
  if (p.size() != e.dim()) {
    throw Error("point dimension " + std::to_string(p.size()) + " does not match expression dimension " +
                std::to_string(e.dim()));
  }
}

}  // namespace

Jet2 Jet2::constant(double v, int n) {
  Jet2 j;
  j.value = v;
  j.grad = Vec::Zero(n);
  j.hess = Mat::Zero(n, n);
  return j;
}

Jet2 Jet2::variable(int i, double v, int n) {
  Jet2 j = constant(v, n);
  j.grad[i] = 1.0;
  return j;
}

Jet2 operator+(const Jet2& a, const Jet2& b) {
  return Jet2{a.value + b.value, a.grad + b.grad, a.hess + b.hess};
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  return Jet2{a.value - b.value, a.grad - b.grad, a.hess - b.hess};
}

Jet2 operator-(const Jet2& a) { return Jet2{-a.value, -a.grad, -a.hess}; }

namespace {
// Vectorized and scalar paths may contract multiply-adds differently, so the
// upper and lower triangles can differ in the last bit. x + y == y + x exactly.
Mat symmetric(const Mat& m) {
  Mat s = m + m.transpose();
  s *= 0.5;
  return s;
}
}  // namespace

Jet2 operator*(const Jet2& a, const Jet2& b) {
  Mat outer = a.grad * b.grad.transpose();
  Mat cross = outer + outer.transpose();
  return Jet2{a.value * b.value, a.value * b.grad + b.value * a.grad,
              symmetric(a.value * b.hess + b.value * a.hess + cross)};
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double r = 1.0 / b.value;
  return a * chain(b, r, -r * r, 2.0 * r * r * r);
}

Jet2 chain(const Jet2& u, double f0, double f1, double f2) {
  return Jet2{f0, f1 * u.grad, symmetric(f1 * u.hess + f2 * (u.grad * u.grad.transpose()))};
}

Expression::Expression(std::shared_ptr<const Node> root, int dim) : root_(std::move(root)), dim_(dim) {}

Expression Expression::constant(double v, int dim) { return Expression(make_constant(v), dim); }

Expression Expression::variable(int index, int dim) {
  if (index < 0 || index >= dim) throw Error("variable index out of range");
  return Expression(make_variable(index), dim);
}

Expression Expression::with_dim(int dim) const {
  if (dim < dim_) throw Error("with_dim cannot shrink an expression");
  return Expression(root_, dim);
}

namespace {
int joint_dim(const Expression& a, const Expression& b) {
  if (a.dim() != b.dim()) throw Error("expression dimension mismatch");
  return a.dim();
}
}  // namespace

Expression operator+(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::add, a.root_ptr(), b.root_ptr()), joint_dim(a, b));
}
Expression operator-(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::sub, a.root_ptr(), b.root_ptr()), joint_dim(a, b));
}
Expression operator*(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::mul, a.root_ptr(), b.root_ptr()), joint_dim(a, b));
}
Expression operator/(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::div, a.root_ptr(), b.root_ptr()), joint_dim(a, b));
}
Expression operator-(const Expression& a) { return Expression(make_unary(Op::neg, a.root_ptr()), a.dim()); }
Expression operator*(double c, const Expression& a) { return Expression::constant(c, a.dim()) * a; }
Expression pow(const Expression& a, const Expression& b) {
  return Expression(make_binary(Op::pow, a.root_ptr(), b.root_ptr()), joint_dim(a, b));
}
Expression apply(Op op, const Expression& a) {
  switch (op) {
    case Op::sin: case Op::cos: case Op::sinh: case Op::cosh: case Op::tanh:
    case Op::exp: case Op::ln: case Op::sqrt: case Op::abs: case Op::arcsin: case Op::neg:
      return Expression(make_unary(op, a.root_ptr()), a.dim());
    default:
      throw Error("apply() takes a unary operation");
  }
}

Expression parse(std::string_view text, int dim) {
  if (dim < 1) throw Error("expression dimension must be positive");
  return Expression(Parser(text, dim).parse(), dim);
}

std::string print(const Expression& e) {
  std::string out;
  print_node(e.root(), out);
  return out;
}

double eval(const Expression& e, const Vec& p) {
  check_dim(e, p);
  return eval_node(e.root(), p);
}

Jet2 eval_jet2(const Expression& e, const Vec& p) {
  check_dim(e, p);
  return jet_node(e.root(), p);
}

}  // namespace obata
