#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ihoc/expr.hpp"
#include "ihoc/types.hpp"

namespace ihoc::testing {

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i == n - 1 ? b : a + (b - a) * i / (n - 1);
  return out;
}

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Row row(std::initializer_list<double> v) { return vec(v).transpose(); }

inline std::vector<Vec> scalar_grid(double a, double b, int n) {
  std::vector<Vec> out;
  for (double v : linspace(a, b, n)) out.push_back(Vec::Constant(1, v));
  return out;
}

/// 20 smooth expressions in t, x1, x2, u1 with a probe point inside their domain.
struct BatteryEntry {
  const char* text;
  double t;
  double x1;
  double x2;
  double u1;
};

inline const std::vector<BatteryEntry>& battery() {
  static const std::vector<BatteryEntry> b = {
      {"x1*sin(t) - x2*cos(t)", 0.7, 0.9, 1.3, 0.6},
      {"exp(-t)*sin(exp(t)*x1) - exp(-x1^2)", 0.4, 0.3, 0.0, 0.0},
      {"sqrt(x1)", 0.0, 2.5, 0.0, 0.0},
      {"-ln(u1)", 0.0, 0.0, 0.0, 1.7},
      {"x1^2 + 3*x1*x2 - x2^3", 0.0, 0.9, -1.3, 0.0},
      {"(x1 + 2)/(x2 + 3)", 0.0, 0.4, 0.8, 0.0},
      {"exp(x1*x2)*cos(u1)", 0.0, 0.5, -0.7, 0.3},
      {"ln(1 + x1^2 + x2^2)", 0.0, 0.6, -0.2, 0.0},
      {"sqrt(1 + u1^2)*x1", 0.0, 1.1, 0.0, -0.8},
      {"x1^x2", 0.0, 1.4, 0.7, 0.0},
      {"2^x1", 0.0, -0.6, 0.0, 0.0},
      {"sin(x1)^2 + cos(x1)^2", 0.0, 0.75, 0.0, 0.0},
      {"-x1 + u1", 0.0, 0.2, 0.0, 1.5},
      {"u1^2/4 + exp(-t)*u1", 1.2, 0.0, 0.0, -0.9},
      {"1/(1 + exp(-x1))", 0.0, 0.35, 0.0, 0.0},
      {"x1*x2*u1*t", 2.1, 0.3, -1.6, 0.8},
      {"exp(-0.25*t)*ln(u1)", 3.0, 0.0, 0.0, 0.45},
      {"(x1 - x2)^3/6", 0.0, 1.2, -0.4, 0.0},
      {"sqrt(x1^2 + x2^2 + 1) - 1", 0.0, -0.5, 0.9, 0.0},
      {"cos(t*x1 + x2)*sin(u1 - x1)", 0.9, 0.4, 0.2, 1.1},
  };
  return b;
}

/// Central difference of e in the variable `var` (h = 1e-5).
inline double central_difference(const Expr& e, const BatteryEntry& p, const std::string& var, double h = 1e-5) {
  auto at = [&](double d) {
    double t = p.t, x1 = p.x1, x2 = p.x2, u1 = p.u1;
    if (var == "t") t += d;
    if (var == "x1") x1 += d;
    if (var == "x2") x2 += d;
    if (var == "u1") u1 += d;
    Vec x(2), u(1);
    x << x1, x2;
    u << u1;
    return evaluate(e, t, x, u);
  };
  return (at(h) - at(-h)) / (2.0 * h);
}

inline PointBindings bindings(const BatteryEntry& p) {
  Vec x(2), u(1);
  x << p.x1, p.x2;
  u << p.u1;
  return {p.t, x, u};
}

}  // namespace ihoc::testing
