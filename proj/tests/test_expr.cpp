#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ihoc/error.hpp"
#include "ihoc/expr.hpp"
#include "support.hpp"

using namespace ihoc;
using ihoc::testing::battery;
using ihoc::testing::bindings;
using ihoc::testing::central_difference;
using ihoc::testing::vec;

namespace {

double eval(const std::string& s, double t = 0.0, Vec x = Vec::Zero(2), Vec u = Vec::Zero(1)) {
  return evaluate(parse_expr(s), t, x, u);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::InvalidArgument;
}

const std::vector<std::string> kVars{"t", "x1", "x2", "u1"};

}  // namespace

TEST(Parser, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(eval("1 + 2*3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2)*3"), 9.0);
  EXPECT_DOUBLE_EQ(eval("2^3^2"), 512.0);
  EXPECT_DOUBLE_EQ(eval("-2^2"), -4.0);
  EXPECT_DOUBLE_EQ(eval("8/4/2"), 1.0);
  EXPECT_DOUBLE_EQ(eval("1 - 2 - 3"), -4.0);
  EXPECT_DOUBLE_EQ(eval("2^-1"), 0.5);
  EXPECT_DOUBLE_EQ(eval("1.5e2 + .5"), 150.5);
}

TEST(Parser, VariablesAndAliases) {
  EXPECT_DOUBLE_EQ(eval("x1 + 10*x2 + 100*u1 + 1000*t", 4.0, vec({1, 2}), vec({3})), 4321.0);
  EXPECT_DOUBLE_EQ(eval("x + u", 0.0, vec({1, 2}), vec({3})), 4.0);
  EXPECT_EQ(parse_var("x3").index, 2);
  EXPECT_EQ(parse_var("u1").space, VarRef::Space::Control);
  EXPECT_EQ(kind_of([] { parse_var("x0"); }), ErrorKind::UnknownIdentifier);
  EXPECT_EQ(kind_of([] { parse_var("x01"); }), ErrorKind::UnknownIdentifier);
  EXPECT_EQ(parse_expr("x1*u2 + x4").max_state_index(), 4);
  EXPECT_EQ(parse_expr("x1*u2 + x4").max_control_index(), 2);
  EXPECT_TRUE(parse_expr("sin(t)").depends_on(parse_var("t")));
  EXPECT_FALSE(parse_expr("sin(t)").depends_on(parse_var("x1")));
}

TEST(Parser, Functions) {
  EXPECT_NEAR(eval("sin(1)^2 + cos(1)^2"), 1.0, 1e-15);
  EXPECT_NEAR(eval("ln(exp(2.5))"), 2.5, 1e-15);
  EXPECT_NEAR(eval("log(exp(2.5))"), 2.5, 1e-15);
  EXPECT_DOUBLE_EQ(eval("sqrt(16)"), 4.0);
}

TEST(Parser, SyntaxErrorsCarryOffsets) {
  try {
    parse_expr("x1 + * 2");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SyntaxError);
    ASSERT_TRUE(e.offset().has_value());
    EXPECT_EQ(*e.offset(), 5u);
  }
  EXPECT_EQ(kind_of([] { parse_expr("(x1 + 2"); }), ErrorKind::SyntaxError);
  EXPECT_EQ(kind_of([] { parse_expr("x1 2"); }), ErrorKind::SyntaxError);
  EXPECT_EQ(kind_of([] { parse_expr(""); }), ErrorKind::SyntaxError);
  EXPECT_EQ(kind_of([] { parse_expr("sin x1"); }), ErrorKind::SyntaxError);
  try {
    parse_expr("1 + tan(x1)");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownIdentifier);
    EXPECT_EQ(*e.offset(), 4u);
  }
}

TEST(Evaluate, DomainErrorsNeverNaN) {
  EXPECT_EQ(kind_of([] { eval("ln(x1)"); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { eval("sqrt(x1 - 1)"); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { eval("1/x1"); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { eval("(-2)^0.5"); }), ErrorKind::DomainError);
  EXPECT_DOUBLE_EQ(eval("(-2)^3"), -8.0);
  EXPECT_DOUBLE_EQ(eval("x1^0"), 1.0);
}

TEST(Evaluate, UnboundVariable) {
  EXPECT_EQ(kind_of([] { evaluate(parse_expr("x3"), 0.0, vec({1, 2}), vec({0})); }), ErrorKind::InvalidArgument);
}

TEST(Printer, CanonicalForms) {
  EXPECT_EQ(print_expr(parse_expr("(x1+x2)*3")), "(x1 + x2)*3");
  EXPECT_EQ(print_expr(parse_expr("x1 - (x2 - 1)")), "x1 - (x2 - 1)");
  EXPECT_EQ(print_expr(parse_expr("2^3^2")), "2^3^2");
  EXPECT_EQ(print_expr(parse_expr("(2^3)^2")), "(2^3)^2");
  EXPECT_EQ(print_expr(parse_expr("log(u)")), "ln(u1)");
}

TEST(Printer, RoundTripOnBattery) {
  for (const auto& b : battery()) {
    const Expr e = parse_expr(b.text);
    const std::string once = print_expr(e);
    const Expr again = parse_expr(once);
    EXPECT_EQ(print_expr(again), once) << b.text;
    const PointBindings at = bindings(b);
    EXPECT_EQ(evaluate(e, at.t, at.x, at.u), evaluate(again, at.t, at.x, at.u)) << b.text;
  }
}

TEST(PrinterProperty, RandomTreesRoundTrip) {
  std::mt19937_64 rng(11);
  using K = ExprNode::Kind;
  const std::vector<K> unary{K::Neg, K::Sin, K::Cos, K::Exp};
  const std::vector<K> binary{K::Add, K::Sub, K::Mul, K::Div, K::Pow};
  std::function<Expr(int)> gen = [&](int depth) -> Expr {
    const int pick = static_cast<int>(rng() % 4);
    if (depth == 0 || pick == 0) {
      if (rng() % 2) return Expr::variable(parse_var(rng() % 2 ? "x1" : "x2"));
      return Expr::literal(static_cast<double>(rng() % 7) + 0.5);
    }
    if (pick == 1) return Expr::unary(unary[rng() % unary.size()], gen(depth - 1));
    return Expr::binary(binary[rng() % binary.size()], gen(depth - 1), gen(depth - 1));
  };
  int compared = 0;
  for (int k = 0; k < 300; ++k) {
    const Expr e = gen(4);
    const std::string s = print_expr(e);
    const Expr p = parse_expr(s);
    EXPECT_EQ(print_expr(p), s);
    try {
      const double a = evaluate(e, 0.3, vec({0.7, 1.1}), vec({0.0}));
      const double b = evaluate(p, 0.3, vec({0.7, 1.1}), vec({0.0}));
      if (std::isfinite(a)) {
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a))) << s;
        ++compared;
      }
    } catch (const Error&) {
      EXPECT_THROW(evaluate(p, 0.3, vec({0.7, 1.1}), vec({0.0})), Error) << s;
    }
  }
  EXPECT_GT(compared, 100);
}

TEST(Dual, PartialsMatchCentralDifferences) {
  for (const auto& b : battery()) {
    const Expr e = parse_expr(b.text);
    const DualValue d = eval_dual(e, bindings(b), kVars);
    for (std::size_t i = 0; i < kVars.size(); ++i) {
      const double fd = central_difference(e, b, kVars[i]);
      EXPECT_NEAR(d.partials[i], fd, 1e-7 * std::max(1.0, std::abs(fd))) << b.text << " d/d" << kVars[i];
    }
  }
}

TEST(Dual, SecondOrderMatchesDifferencedGradient) {
  std::vector<VarRef> wrt;
  for (const auto& v : kVars) wrt.push_back(parse_var(v));
  for (const auto& b : battery()) {
    const Expr e = parse_expr(b.text);
    const SecondOrder so = eval_second_order(e, bindings(b), wrt);
    EXPECT_LT((so.hessian - so.hessian.transpose()).norm(), 1e-10) << b.text;
    for (std::size_t j = 0; j < wrt.size(); ++j) {
      PointBindings p = bindings(b), m = bindings(b);
      const double h = 1e-5;
      auto shift = [&](PointBindings& q, double d) {
        if (j == 0) q.t += d;
        else if (j == 3) q.u[0] += d;
        else q.x[static_cast<Eigen::Index>(j - 1)] += d;
      };
      shift(p, h);
      shift(m, -h);
      const DualValue gp = eval_dual(e, p, std::span<const VarRef>(wrt));
      const DualValue gm = eval_dual(e, m, std::span<const VarRef>(wrt));
      for (std::size_t i = 0; i < wrt.size(); ++i) {
        const double fd = (gp.partials[i] - gm.partials[i]) / (2 * h);
        EXPECT_NEAR(so.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), fd,
                    1e-6 * std::max(1.0, std::abs(fd)))
            << b.text;
      }
    }
  }
}

TEST(Dual, ThirdDerivativeOfLog) {
  PointBindings at{0.0, Vec::Zero(1), vec({2.0})};
  const auto d = eval_derivatives3(parse_expr("-ln(u1)"), at, parse_var("u1"));
  EXPECT_NEAR(d[0], -std::log(2.0), 1e-15);
  EXPECT_NEAR(d[1], -0.5, 1e-15);
  EXPECT_NEAR(d[2], 0.25, 1e-15);
  EXPECT_NEAR(d[3], -0.25, 1e-15);
}

TEST(Compiled, AgreesWithTreeEvaluation) {
  std::vector<VarRef> wrt;
  for (const auto& v : kVars) wrt.push_back(parse_var(v));
  for (const auto& b : battery()) {
    const Expr e = parse_expr(b.text);
    const CompiledExpr c(e, wrt);
    const PointBindings at = bindings(b);
    double grad[4], hess[16];
    const double v = c.hessian(at.t, at.x.data(), at.u.data(), grad, hess);
    const SecondOrder so = eval_second_order(e, at, wrt);
    EXPECT_NEAR(v, so.value, 1e-13 * std::max(1.0, std::abs(v))) << b.text;
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(grad[i], so.gradient[i], 1e-11 * std::max(1.0, std::abs(grad[i]))) << b.text;
      for (int j = 0; j < 4; ++j) EXPECT_NEAR(hess[4 * i + j], so.hessian(i, j), 1e-9 * std::max(1.0, std::abs(hess[4 * i + j])));
    }
    EXPECT_DOUBLE_EQ(c.value(at.t, at.x.data(), at.u.data()), v);
  }
}

TEST(Compiled, DomainAndLimits) {
  const CompiledExpr c(parse_expr("sqrt(x1)"), {parse_var("x1")});
  double x = 0.0, u = 0.0, g = 0.0;
  EXPECT_DOUBLE_EQ(c.value(0.0, &x, &u), 0.0);
  EXPECT_EQ(kind_of([&] { c.gradient(0.0, &x, &u, &g); }), ErrorKind::DomainError);
  std::vector<VarRef> many(9, parse_var("t"));
  EXPECT_EQ(kind_of([&] { CompiledExpr(parse_expr("t"), many); }), ErrorKind::InvalidArgument);
}
