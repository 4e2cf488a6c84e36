#pragma once

// Scalar field expressions over chart coordinates and second-order jets.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | 'pi' | var | func '(' sum ')' | '(' sum ')'
//   var     := 'x' digits | 't'              t is an alias of x0
//   func    := sin cos sinh cosh tanh exp ln sqrt abs arcsin

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace obata {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Op {
  constant,
  variable,
  neg,
  sin,
  cos,
  sinh,
  cosh,
  tanh,
  exp,
  ln,
  sqrt,
  abs,
  arcsin,
  add,
  sub,
  mul,
  div,
  pow,
};

struct Node {
  Op op = Op::constant;
  double value = 0.0;
  int index = 0;
  std::size_t position = 0;
  bool has_variables = false;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

/// Value, gradient and Hessian of a scalar function at a point.
struct Jet2 {
  double value = 0.0;
  Vec grad;
  Mat hess;

  static Jet2 constant(double v, int n);
  static Jet2 variable(int i, double v, int n);
  int dim() const { return static_cast<int>(grad.size()); }
};

/// Immutable expression tree bound to a coordinate dimension.
class Expression {
 public:
  Expression() = default;
  Expression(std::shared_ptr<const Node> root, int dim);

  static Expression constant(double v, int dim);
  static Expression variable(int index, int dim);

  int dim() const { return dim_; }
  bool valid() const { return root_ != nullptr; }
  const Node& root() const { return *root_; }
  const std::shared_ptr<const Node>& root_ptr() const { return root_; }

  // Same tree over a larger coordinate space (variables keep their index).
  Expression with_dim(int dim) const;

 private:
  std::shared_ptr<const Node> root_;
  int dim_ = 0;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator*(double c, const Expression& a);
Expression pow(const Expression& a, const Expression& b);
Expression apply(Op op, const Expression& a);

Expression parse(std::string_view text, int dim);

/// Canonical text form. parse(print(e), e.dim()) evaluates bit-identically.
std::string print(const Expression& e);

double eval(const Expression& e, const Vec& p);
Jet2 eval_jet2(const Expression& e, const Vec& p);

// Jet algebra. Hessians stay exactly symmetric under every operation.
Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 chain(const Jet2& u, double f0, double f1, double f2);

}  // namespace obata
