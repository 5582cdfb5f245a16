#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihoc/dual.hpp"
#include "ihoc/types.hpp"

namespace ihoc {

/// Variable reference: t, x<i> or u<i> (indices 1-based in text, 0-based here).
struct VarRef {
  enum class Space { Time, State, Control };
  Space space = Space::Time;
  int index = 0;

  std::string name() const;
  friend bool operator==(const VarRef&, const VarRef&) = default;
};

/// Parses "t", "x3", "u1" and the aliases "x" (= x1) and "u" (= u1).
/// Throws UnknownIdentifier.
VarRef parse_var(std::string_view name);

struct ExprNode {
  enum class Kind { Literal, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Ln, Sqrt };

  Kind kind = Kind::Literal;
  double value = 0.0;
  VarRef var{};
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

/// Immutable expression tree over literals, t, x1..xm, u1..uk and the
/// functions sin, cos, exp, ln, sqrt.
class Expr {
 public:
  using NodePtr = std::shared_ptr<const ExprNode>;

  Expr() : Expr(literal(0.0)) {}
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  static Expr literal(double v);
  static Expr variable(VarRef v);
  static Expr unary(ExprNode::Kind kind, const Expr& a);
  static Expr binary(ExprNode::Kind kind, const Expr& a, const Expr& b);

  const ExprNode& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  /// Highest 1-based state / control index referenced (0 if none).
  int max_state_index() const;
  int max_control_index() const;
  bool depends_on(VarRef v) const;

 private:
  NodePtr root_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

/// Grammar (see docs/expression_grammar.md); throws SyntaxError with the byte
/// offset of the offending token, or UnknownIdentifier.
Expr parse_expr(std::string_view text);

/// Canonical text form; parse_expr(print_expr(e)) has the same tree as e.
std::string print_expr(const Expr& e);

template <typename T>
struct Bindings {
  T t{};
  std::span<const T> x;
  std::span<const T> u;
};

namespace detail {

template <typename T>
T eval_node(const ExprNode& n, const Bindings<T>& b) {
  using ad::safe_div;
  using ad::safe_log;
  using ad::safe_pow;
  using ad::safe_sqrt;
  using std::cos;
  using std::exp;
  using std::sin;
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::Literal:
      return T(n.value);
    case K::Var: {
      switch (n.var.space) {
        case VarRef::Space::Time:
          return b.t;
        case VarRef::Space::State:
          if (static_cast<std::size_t>(n.var.index) >= b.x.size()) break;
          return b.x[static_cast<std::size_t>(n.var.index)];
        case VarRef::Space::Control:
          if (static_cast<std::size_t>(n.var.index) >= b.u.size()) break;
          return b.u[static_cast<std::size_t>(n.var.index)];
      }
      throw Error(ErrorKind::InvalidArgument, "unbound variable " + n.var.name());
    }
    case K::Neg:
      return -eval_node(*n.lhs, b);
    case K::Add:
      return eval_node(*n.lhs, b) + eval_node(*n.rhs, b);
    case K::Sub:
      return eval_node(*n.lhs, b) - eval_node(*n.rhs, b);
    case K::Mul:
      return eval_node(*n.lhs, b) * eval_node(*n.rhs, b);
    case K::Div:
      return safe_div(eval_node(*n.lhs, b), eval_node(*n.rhs, b));
    case K::Pow:
      return safe_pow(eval_node(*n.lhs, b), eval_node(*n.rhs, b));
    case K::Sin:
      return sin(eval_node(*n.lhs, b));
    case K::Cos:
      return cos(eval_node(*n.lhs, b));
    case K::Exp:
      return exp(eval_node(*n.lhs, b));
    case K::Ln:
      return safe_log(eval_node(*n.lhs, b));
    case K::Sqrt:
      return safe_sqrt(eval_node(*n.lhs, b));
  }
  throw Error(ErrorKind::InvalidArgument, "corrupt expression node");
}

}  // namespace detail

/// Generic evaluation (double or nested duals). Throws DomainError, never
/// returns NaN from ln/sqrt/division.
template <typename T>
T evaluate(const Expr& e, const Bindings<T>& b) {
  return detail::eval_node(e.root(), b);
}

double evaluate(const Expr& e, double t, const Vec& x, const Vec& u);

/// Value and partials with respect to `wrt`.
struct DualValue {
  double value = 0.0;
  std::vector<double> partials;
};

struct PointBindings {
  double t = 0.0;
  Vec x;
  Vec u;
};

DualValue eval_dual(const Expr& e, const PointBindings& at, std::span<const VarRef> wrt);
DualValue eval_dual(const Expr& e, const PointBindings& at, const std::vector<std::string>& wrt);

/// Value, gradient and Hessian with respect to `wrt` (forward over forward).
struct SecondOrder {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};
SecondOrder eval_second_order(const Expr& e, const PointBindings& at, std::span<const VarRef> wrt);

/// Value and first three derivatives with respect to a single variable.
std::array<double, 4> eval_derivatives3(const Expr& e, const PointBindings& at, VarRef var);

/// Flattened postfix form of an expression with allocation-light evaluation
/// of the value, gradient and Hessian with respect to up to kMaxVars
/// variables. Same domain rules as evaluate(). x and u must hold at least
/// max_state_index() / max_control_index() entries.
class CompiledExpr {
 public:
  static constexpr int kMaxVars = 8;

  CompiledExpr() = default;
  CompiledExpr(const Expr& e, std::vector<VarRef> wrt);

  const std::vector<VarRef>& wrt() const { return wrt_; }
  int nvars() const { return static_cast<int>(wrt_.size()); }

  double value(double t, const double* x, const double* u) const;
  /// grad has nvars() entries.
  double gradient(double t, const double* x, const double* u, double* grad) const;
  /// hess is nvars() x nvars() row-major.
  double hessian(double t, const double* x, const double* u, double* grad, double* hess) const;

  struct Instr {
    ExprNode::Kind kind;
    double value;
    VarRef var;
    int slot;  // index into wrt, or -1
  };

 private:
  template <int Order>
  double run(double t, const double* x, const double* u, double* grad, double* hess) const;

  std::vector<Instr> code_;
  std::vector<VarRef> wrt_;
  int max_depth_ = 0;
};

}  // namespace ihoc
