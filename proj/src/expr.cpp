#include "ihoc/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "ihoc/error.hpp"

namespace ihoc {

namespace {

using K = ExprNode::Kind;
using NodePtr = Expr::NodePtr;

bool is_function(K k) {
  return k == K::Sin || k == K::Cos || k == K::Exp || k == K::Ln || k == K::Sqrt;
}

const char* function_name(K k) {
  switch (k) {
    case K::Sin: return "sin";
    case K::Cos: return "cos";
    case K::Exp: return "exp";
    case K::Ln: return "ln";
    case K::Sqrt: return "sqrt";
    default: return "";
  }
}

bool lookup_function(std::string_view name, K& out) {
  static constexpr std::array<std::pair<std::string_view, K>, 6> table{{
      {"sin", K::Sin}, {"cos", K::Cos}, {"exp", K::Exp},
      {"ln", K::Ln}, {"log", K::Ln}, {"sqrt", K::Sqrt}}};
  for (const auto& [n, k] : table) {
    if (n == name) {
      out = k;
      return true;
    }
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Expr parse() {
    skip();
    if (pos_ >= s_.size()) fail("empty expression");
    Expr e = expr();
    skip();
    if (pos_ < s_.size()) fail(fmt::format("unexpected '{}'", s_[pos_]));
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { fail_at(what, pos_); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t at) const {
    throw Error(ErrorKind::SyntaxError, fmt::format("{} at offset {}", what, at), at);
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

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= s_.size()) fail(fmt::format("expected '{}' before end of input", c));
      fail(fmt::format("expected '{}'", c));
    }
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(K::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expr::binary(K::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(K::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = Expr::binary(K::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::unary(K::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return Expr::binary(K::Pow, base, unary());
    return base;
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view name = s_.substr(start, pos_ - start);
      K fk{};
      if (lookup_function(name, fk)) {
        if (!accept('(')) fail(fmt::format("expected '(' after {}", name));
        Expr arg = expr();
        expect(')');
        return Expr::unary(fk, arg);
      }
      try {
        return Expr::variable(parse_var(name));
      } catch (const Error& e) {
        throw Error(ErrorKind::UnknownIdentifier,
                    fmt::format("unknown identifier '{}' at offset {}", name, start), start);
      }
    }
    fail(fmt::format("unexpected '{}'", c));
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
        pos_ = p;
      }
    }
    double v = 0.0;
    const char* first = s_.data() + start;
    const char* last = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail_at("malformed number", start);
    if (!std::isfinite(v)) fail_at("number out of range", start);
    return Expr::literal(v);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

int precedence(K k) {
  switch (k) {
    case K::Add:
    case K::Sub: return 1;
    case K::Mul:
    case K::Div: return 2;
    case K::Neg: return 3;
    case K::Pow: return 4;
    default: return 5;
  }
}

void print_node(const ExprNode& n, std::string& out);

void print_child(const ExprNode& n, bool parens, std::string& out) {
  if (parens) out += '(';
  print_node(n, out);
  if (parens) out += ')';
}

const char* op_text(K k) {
  switch (k) {
    case K::Add: return " + ";
    case K::Sub: return " - ";
    case K::Mul: return "*";
    case K::Div: return "/";
    case K::Pow: return "^";
    default: return "";
  }
}

void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case K::Literal:
      if (std::signbit(n.value)) {
        out += fmt::format("(-{})", -n.value);
      } else {
        out += fmt::format("{}", n.value);
      }
      return;
    case K::Var:
      out += n.var.name();
      return;
    case K::Neg:
      out += "(-";
      print_child(*n.lhs, precedence(n.lhs->kind) < precedence(K::Neg), out);
      out += ')';
      return;
    case K::Pow: {
      // Left operand of ^ must be a primary; the right side is a unary.
      const int lp = precedence(n.lhs->kind);
      print_child(*n.lhs, lp <= precedence(K::Pow) && n.lhs->kind != K::Neg, out);
      out += '^';
      const int rp = precedence(n.rhs->kind);
      print_child(*n.rhs, rp < precedence(K::Neg), out);
      return;
    }
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::Div: {
      const int p = precedence(n.kind);
      print_child(*n.lhs, precedence(n.lhs->kind) < p, out);
      out += op_text(n.kind);
      print_child(*n.rhs, precedence(n.rhs->kind) <= p, out);
      return;
    }
    default:
      out += function_name(n.kind);
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
  }
}

void scan(const ExprNode& n, int& max_x, int& max_u) {
  if (n.kind == K::Var) {
    if (n.var.space == VarRef::Space::State) max_x = std::max(max_x, n.var.index + 1);
    if (n.var.space == VarRef::Space::Control) max_u = std::max(max_u, n.var.index + 1);
  }
  if (n.lhs) scan(*n.lhs, max_x, max_u);
  if (n.rhs) scan(*n.rhs, max_x, max_u);
}

bool uses(const ExprNode& n, const VarRef& v) {
  if (n.kind == K::Var && n.var == v) return true;
  return (n.lhs && uses(*n.lhs, v)) || (n.rhs && uses(*n.rhs, v));
}

template <typename T>
struct SeededPoint {
  T t;
  std::vector<T> x;
  std::vector<T> u;

  Bindings<T> bindings() const { return {t, x, u}; }

  T& slot(const VarRef& v) {
    switch (v.space) {
      case VarRef::Space::Time: return t;
      case VarRef::Space::State:
        if (static_cast<std::size_t>(v.index) >= x.size()) break;
        return x[static_cast<std::size_t>(v.index)];
      case VarRef::Space::Control:
        if (static_cast<std::size_t>(v.index) >= u.size()) break;
        return u[static_cast<std::size_t>(v.index)];
    }
    throw Error(ErrorKind::InvalidArgument, "differentiation variable " + v.name() + " is unbound");
  }
};

template <typename T>
SeededPoint<T> lift(const PointBindings& at) {
  SeededPoint<T> p{T(at.t), {}, {}};
  for (Eigen::Index i = 0; i < at.x.size(); ++i) p.x.push_back(T(at.x[i]));
  for (Eigen::Index i = 0; i < at.u.size(); ++i) p.u.push_back(T(at.u[i]));
  return p;
}

}  // namespace

std::string VarRef::name() const {
  switch (space) {
    case Space::Time: return "t";
    case Space::State: return fmt::format("x{}", index + 1);
    case Space::Control: return fmt::format("u{}", index + 1);
  }
  return "?";
}

VarRef parse_var(std::string_view name) {
  if (name == "t") return {VarRef::Space::Time, 0};
  if (name == "x") return {VarRef::Space::State, 0};
  if (name == "u") return {VarRef::Space::Control, 0};
  if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u') && name[1] != '0') {
    int idx = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
    if (ec == std::errc() && ptr == name.data() + name.size() && idx >= 1) {
      return {name[0] == 'x' ? VarRef::Space::State : VarRef::Space::Control, idx - 1};
    }
  }
  throw Error(ErrorKind::UnknownIdentifier, fmt::format("unknown identifier '{}'", name));
}

Expr Expr::literal(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = K::Literal;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::variable(VarRef v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = K::Var;
  n->var = v;
  return Expr(std::move(n));
}

Expr Expr::unary(ExprNode::Kind kind, const Expr& a) {
  if (kind != K::Neg && !is_function(kind)) {
    throw Error(ErrorKind::InvalidArgument, "not a unary expression kind");
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->lhs = a.root_ptr();
  return Expr(std::move(n));
}

Expr Expr::binary(ExprNode::Kind kind, const Expr& a, const Expr& b) {
  if (kind != K::Add && kind != K::Sub && kind != K::Mul && kind != K::Div && kind != K::Pow) {
    throw Error(ErrorKind::InvalidArgument, "not a binary expression kind");
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->lhs = a.root_ptr();
  n->rhs = b.root_ptr();
  return Expr(std::move(n));
}

int Expr::max_state_index() const {
  int mx = 0, mu = 0;
  scan(*root_, mx, mu);
  return mx;
}

int Expr::max_control_index() const {
  int mx = 0, mu = 0;
  scan(*root_, mx, mu);
  return mu;
}

bool Expr::depends_on(VarRef v) const { return uses(*root_, v); }

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(K::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(K::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(K::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(K::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(K::Neg, a); }

Expr parse_expr(std::string_view text) { return Parser(text).parse(); }

std::string print_expr(const Expr& e) {
  std::string out;
  print_node(e.root(), out);
  return out;
}

double evaluate(const Expr& e, double t, const Vec& x, const Vec& u) {
  Bindings<double> b{t, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                     std::span<const double>(u.data(), static_cast<std::size_t>(u.size()))};
  return evaluate(e, b);
}

DualValue eval_dual(const Expr& e, const PointBindings& at, std::span<const VarRef> wrt) {
  using D = ad::Dual<double>;
  auto p = lift<D>(at);
  const std::size_t n = wrt.size();
  for (std::size_t i = 0; i < n; ++i) {
    D& s = p.slot(wrt[i]);
    s.d.assign(n, 0.0);
    s.d[i] = 1.0;
  }
  const D r = evaluate(e, p.bindings());
  DualValue out;
  out.value = r.v;
  out.partials.assign(n, 0.0);
  for (std::size_t i = 0; i < r.d.size() && i < n; ++i) out.partials[i] = r.d[i];
  return out;
}

DualValue eval_dual(const Expr& e, const PointBindings& at, const std::vector<std::string>& wrt) {
  std::vector<VarRef> refs;
  refs.reserve(wrt.size());
  for (const auto& name : wrt) refs.push_back(parse_var(name));
  return eval_dual(e, at, refs);
}

SecondOrder eval_second_order(const Expr& e, const PointBindings& at, std::span<const VarRef> wrt) {
  using D1 = ad::Dual<double>;
  using D2 = ad::Dual<D1>;
  auto p = lift<D2>(at);
  const std::size_t n = wrt.size();
  for (std::size_t i = 0; i < n; ++i) {
    D2& s = p.slot(wrt[i]);
    std::vector<double> inner(n, 0.0);
    inner[i] = 1.0;
    s.v = D1(s.v.v, inner);
    s.d.assign(n, D1(0.0));
    s.d[i] = D1(1.0);
  }
  const D2 r = evaluate(e, p.bindings());
  SecondOrder out;
  out.value = r.v.v;
  out.gradient = Vec::Zero(static_cast<Eigen::Index>(n));
  out.hessian = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n && i < r.v.d.size(); ++i) {
    out.gradient[static_cast<Eigen::Index>(i)] = r.v.d[i];
  }
  for (std::size_t i = 0; i < n && i < r.d.size(); ++i) {
    for (std::size_t j = 0; j < n && j < r.d[i].d.size(); ++j) {
      out.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.d[i].d[j];
    }
  }
  return out;
}

std::array<double, 4> eval_derivatives3(const Expr& e, const PointBindings& at, VarRef var) {
  using D1 = ad::Dual<double>;
  using D2 = ad::Dual<D1>;
  using D3 = ad::Dual<D2>;
  auto p = lift<D3>(at);
  D3& s = p.slot(var);
  const double x = s.v.v.v;
  s = D3(D2(D1(x, {1.0}), {D1(1.0)}), {D2(1.0)});
  const D3 r = evaluate(e, p.bindings());
  auto d1 = [](const D1& a) { return a.d.empty() ? 0.0 : a.d[0]; };
  auto dd = [](const D2& a) { return a.d.empty() ? D1(0.0) : a.d[0]; };
  auto ddd = [](const D3& a) { return a.d.empty() ? D2(0.0) : a.d[0]; };
  return {r.v.v.v, d1(r.v.v), d1(dd(r.v)), d1(dd(ddd(r)))};
}

}  // namespace ihoc

namespace ihoc {

namespace {

struct Jet {
  double v;
  std::array<double, CompiledExpr::kMaxVars> g;
  std::array<double, CompiledExpr::kMaxVars * CompiledExpr::kMaxVars> h;
};

void flatten(const ExprNode& n, std::vector<CompiledExpr::Instr>& code,
             const std::vector<VarRef>& wrt, int depth, int& max_depth) {
  if (n.lhs) flatten(*n.lhs, code, wrt, depth, max_depth);
  if (n.rhs) flatten(*n.rhs, code, wrt, depth + 1, max_depth);
  int slot = -1;
  if (n.kind == K::Var) {
    for (std::size_t i = 0; i < wrt.size(); ++i) {
      if (wrt[i] == n.var) slot = static_cast<int>(i);
    }
  }
  max_depth = std::max(max_depth, depth + 1 + (n.rhs ? 1 : 0));
  code.push_back({n.kind, n.value, n.var, slot});
}

// r = phi(a) with phi' = d1, phi'' = d2.
template <int Order>
void apply_unary(Jet& a, double value, double d1, double d2, int n) {
  if constexpr (Order >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        a.h[i * n + j] = d1 * a.h[i * n + j] + d2 * a.g[i] * a.g[j];
      }
    }
  }
  if constexpr (Order >= 1) {
    for (int i = 0; i < n; ++i) a.g[i] *= d1;
  }
  a.v = value;
}

template <int Order>
void apply_mul(Jet& a, const Jet& b, int n) {
  if constexpr (Order >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        a.h[i * n + j] = a.h[i * n + j] * b.v + a.v * b.h[i * n + j] + a.g[i] * b.g[j] + b.g[i] * a.g[j];
      }
    }
  }
  if constexpr (Order >= 1) {
    for (int i = 0; i < n; ++i) a.g[i] = a.g[i] * b.v + a.v * b.g[i];
  }
  a.v *= b.v;
}

template <int Order>
bool has_grad(const Jet& a, int n) {
  if constexpr (Order == 0) {
    return false;
  } else {
    for (int i = 0; i < n; ++i) {
      if (a.g[i] != 0.0) return true;
    }
    return false;
  }
}

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e, std::vector<VarRef> wrt) : wrt_(std::move(wrt)) {
  if (wrt_.size() > static_cast<std::size_t>(kMaxVars)) {
    throw Error(ErrorKind::InvalidArgument, fmt::format("at most {} differentiation variables", kMaxVars));
  }
  flatten(e.root(), code_, wrt_, 0, max_depth_);
}

template <int Order>
double CompiledExpr::run(double t, const double* x, const double* u, double* grad, double* hess) const {
  const int n = nvars();
  std::vector<Jet> stack(static_cast<std::size_t>(max_depth_ + 1));
  int sp = 0;
  auto clear = [&](Jet& j) {
    if constexpr (Order >= 1) std::fill_n(j.g.begin(), n, 0.0);
    if constexpr (Order >= 2) std::fill_n(j.h.begin(), n * n, 0.0);
  };
  for (const Instr& ins : code_) {
    switch (ins.kind) {
      case K::Literal: {
        Jet& r = stack[sp++];
        r.v = ins.value;
        clear(r);
        break;
      }
      case K::Var: {
        Jet& r = stack[sp++];
        switch (ins.var.space) {
          case VarRef::Space::Time: r.v = t; break;
          case VarRef::Space::State: r.v = x[ins.var.index]; break;
          case VarRef::Space::Control: r.v = u[ins.var.index]; break;
        }
        clear(r);
        if constexpr (Order >= 1) {
          if (ins.slot >= 0) r.g[ins.slot] = 1.0;
        }
        break;
      }
      case K::Neg:
        apply_unary<Order>(stack[sp - 1], -stack[sp - 1].v, -1.0, 0.0, n);
        break;
      case K::Add:
      case K::Sub: {
        Jet& a = stack[sp - 2];
        const Jet& b = stack[sp - 1];
        const double s = ins.kind == K::Add ? 1.0 : -1.0;
        a.v += s * b.v;
        if constexpr (Order >= 1) {
          for (int i = 0; i < n; ++i) a.g[i] += s * b.g[i];
        }
        if constexpr (Order >= 2) {
          for (int i = 0; i < n * n; ++i) a.h[i] += s * b.h[i];
        }
        --sp;
        break;
      }
      case K::Mul:
        apply_mul<Order>(stack[sp - 2], stack[sp - 1], n);
        --sp;
        break;
      case K::Div: {
        Jet& b = stack[sp - 1];
        if (b.v == 0.0) ad::detail::domain("division by zero");
        const double inv = 1.0 / b.v;
        apply_unary<Order>(b, inv, -inv * inv, 2.0 * inv * inv * inv, n);
        apply_mul<Order>(stack[sp - 2], b, n);
        --sp;
        break;
      }
      case K::Pow: {
        Jet& a = stack[sp - 2];
        const Jet& b = stack[sp - 1];
        if (!has_grad<Order>(b, n)) {
          const double c = b.v;
          const bool integral = c == std::floor(c);
          if (a.v < 0.0 && !integral) ad::detail::domain("negative base with non-integer exponent");
          const bool da = has_grad<Order>(a, n);
          if (a.v == 0.0 && c < 0.0) ad::detail::domain("pow is singular at a zero base");
          const double p = c == 0.0 ? 1.0 : std::pow(a.v, c);
          double d1 = 0.0, d2 = 0.0;
          if (da && c != 0.0) {
            if constexpr (Order >= 1) {
              if (a.v == 0.0 && c < 1.0) ad::detail::domain("pow is singular at a zero base");
              d1 = c * (c == 1.0 ? 1.0 : std::pow(a.v, c - 1.0));
            }
            if constexpr (Order >= 2) {
              if (c != 1.0) {
                if (a.v == 0.0 && c < 2.0) ad::detail::domain("pow is singular at a zero base");
                d2 = c * (c - 1.0) * (c == 2.0 ? 1.0 : std::pow(a.v, c - 2.0));
              }
            }
          }
          apply_unary<Order>(a, p, d1, d2, n);
        } else {
          if (!(a.v > 0.0)) ad::detail::domain("pow with a variable exponent needs a positive base");
          const double la = std::log(a.v);
          const double ia = 1.0 / a.v;
          apply_unary<Order>(a, la, ia, -ia * ia, n);
          apply_mul<Order>(a, b, n);
          const double e = std::exp(a.v);
          apply_unary<Order>(a, e, e, e, n);
        }
        --sp;
        break;
      }
      case K::Sin: {
        Jet& a = stack[sp - 1];
        const double s = std::sin(a.v), c = std::cos(a.v);
        apply_unary<Order>(a, s, c, -s, n);
        break;
      }
      case K::Cos: {
        Jet& a = stack[sp - 1];
        const double s = std::sin(a.v), c = std::cos(a.v);
        apply_unary<Order>(a, c, -s, -c, n);
        break;
      }
      case K::Exp: {
        Jet& a = stack[sp - 1];
        const double e = std::exp(a.v);
        apply_unary<Order>(a, e, e, e, n);
        break;
      }
      case K::Ln: {
        Jet& a = stack[sp - 1];
        if (!(a.v > 0.0)) ad::detail::domain("ln of a non-positive argument");
        const double ia = 1.0 / a.v;
        apply_unary<Order>(a, std::log(a.v), ia, -ia * ia, n);
        break;
      }
      case K::Sqrt: {
        Jet& a = stack[sp - 1];
        if (a.v < 0.0) ad::detail::domain("sqrt of a negative argument");
        if (a.v == 0.0 && has_grad<Order>(a, n)) ad::detail::domain("sqrt is not differentiable at 0");
        const double s = std::sqrt(a.v);
        const double d1 = a.v > 0.0 ? 0.5 / s : 0.0;
        const double d2 = a.v > 0.0 ? -0.25 / (s * a.v) : 0.0;
        apply_unary<Order>(a, s, d1, d2, n);
        break;
      }
    }
  }
  const Jet& r = stack[0];
  if constexpr (Order >= 1) std::copy_n(r.g.begin(), n, grad);
  if constexpr (Order >= 2) std::copy_n(r.h.begin(), n * n, hess);
  return r.v;
}

double CompiledExpr::value(double t, const double* x, const double* u) const {
  return run<0>(t, x, u, nullptr, nullptr);
}

double CompiledExpr::gradient(double t, const double* x, const double* u, double* grad) const {
  return run<1>(t, x, u, grad, nullptr);
}

double CompiledExpr::hessian(double t, const double* x, const double* u, double* grad, double* hess) const {
  return run<2>(t, x, u, grad, hess);
}

}  // namespace ihoc
