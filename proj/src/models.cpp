#include "ihoc/models.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>

#include <fmt/format.h>

#include "ihoc/error.hpp"

namespace ihoc {

namespace {

constexpr VarRef kT{VarRef::Space::Time, 0};
constexpr VarRef kX1{VarRef::Space::State, 0};
constexpr VarRef kU1{VarRef::Space::Control, 0};
constexpr double kRamseyFloor = 1e-9;

VarRef state(int i) { return {VarRef::Space::State, i}; }

std::vector<VarRef> time_and_state(int m) {
  std::vector<VarRef> v{kT};
  for (int i = 0; i < m; ++i) v.push_back(state(i));
  return v;
}

std::vector<VarRef> states(int m) {
  std::vector<VarRef> v;
  for (int i = 0; i < m; ++i) v.push_back(state(i));
  return v;
}

void require_dims(const Expr& e, int m, int k, const std::string& what) {
  if (e.max_state_index() > m || e.max_control_index() > k) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("{} references x{} / u{} beyond m = {}, k = {}", what, e.max_state_index(),
                            e.max_control_index(), m, k));
  }
}

std::vector<double> log_probes(double lo, double hi, int n) {
  std::vector<double> p;
  for (int i = 0; i < n; ++i) p.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return p;
}

// Scalar derivative helpers for the Ramsey expressions.
struct Scalar1 {
  CompiledExpr expr;
  bool control = false;

  Scalar1(const Expr& e, VarRef v) : expr(e, {v}), control(v.space == VarRef::Space::Control) {}

  double value(double s) const { return control ? expr.value(0.0, nullptr, &s) : expr.value(0.0, &s, nullptr); }
  double d1(double s) const {
    double g = 0.0;
    if (control) {
      expr.gradient(0.0, nullptr, &s, &g);
    } else {
      expr.gradient(0.0, &s, nullptr, &g);
    }
    return g;
  }
  double d2(double s) const {
    double g = 0.0, h = 0.0;
    if (control) {
      expr.hessian(0.0, nullptr, &s, &g, &h);
    } else {
      expr.hessian(0.0, &s, nullptr, &g, &h);
    }
    return h;
  }
};

void require_scalar_expr(const Expr& e, VarRef allowed, const char* what) {
  const bool ok = !e.depends_on(kT) && e.max_state_index() <= (allowed.space == VarRef::Space::State ? 1 : 0) &&
                  e.max_control_index() <= (allowed.space == VarRef::Space::Control ? 1 : 0);
  if (!ok) {
    throw Error(ErrorKind::InvalidArgument, fmt::format("{} may depend on {} only", what, allowed.name()));
  }
}

void check_disutility(const Scalar1& f0) {
  for (double v : log_probes(1e-3, 1e3, 31)) {
    if (!(f0.d1(v) < 0.0)) {
      throw Error(ErrorKind::DomainError, fmt::format("f0' must be negative, fails at u = {:.6g}", v));
    }
    if (!(f0.d2(v) > 0.0)) {
      throw Error(ErrorKind::DomainError, fmt::format("f0'' must be positive, fails at u = {:.6g}", v));
    }
  }
}

// Newton iteration on a decreasing-or-increasing bracketed function with
// bisection safeguard; g(lo) and g(hi) have opposite signs.
template <typename G, typename DG>
double bracketed_newton(G g, DG dg, double lo, double hi) {
  double glo = g(lo);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if ((gx > 0.0) == (glo > 0.0)) {
      lo = x;
      glo = gx;
    } else {
      hi = x;
    }
    const double d = dg(x);
    double next = d != 0.0 ? x - gx / d : std::numeric_limits<double>::quiet_NaN();
    const double a = std::min(lo, hi), b = std::max(lo, hi);
    if (!(next > a && next < b)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    if (std::abs(hi - lo) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace

SDrivenModel planar_model(Vec x_star) {
  if (x_star.size() != 2) throw Error(ErrorKind::DimensionMismatch, "planar model has m = 2");
  return {"planar", 2, parse_expr("x1*sin(t) - x2*cos(t)"), std::move(x_star)};
}

SDrivenModel oscillator_model() {
  return {"oscillator", 1, parse_expr("exp(-t)*sin(exp(t)*x1) - exp(-x1^2)"), Vec::Zero(1)};
}

double sdriven_S(const SDrivenModel& model, double t, const Vec& x) {
  return evaluate(model.S, t, x, Vec());
}

Row sdriven_Sx(const SDrivenModel& model, double t, const Vec& x) {
  const CompiledExpr c(model.S, states(model.m));
  Row g(model.m);
  c.gradient(t, x.data(), nullptr, g.data());
  return g;
}

ControlSystem sdriven_system(const SDrivenModel& model) {
  const int m = model.m;
  if (m < 1 || m + 1 > CompiledExpr::kMaxVars) {
    throw Error(ErrorKind::InvalidArgument, fmt::format("S-driven models need 1 <= m <= {}", CompiledExpr::kMaxVars - 1));
  }
  if (model.x_star.size() != m) throw Error(ErrorKind::DimensionMismatch, "x* has the wrong dimension");
  require_dims(model.S, m, 0, "S");
  auto S = std::make_shared<const CompiledExpr>(model.S, time_and_state(m));
  {
    std::vector<double> g(static_cast<std::size_t>(m + 1)), h(static_cast<std::size_t>((m + 1) * (m + 1)));
    S->hessian(0.0, model.x_star.data(), nullptr, g.data(), h.data());
  }

  ControlSystem sys;
  sys.state_dim = m;
  sys.control_dim = m;
  sys.f = [](double t, const Vec&, const Vec& u) -> Vec { return std::exp(-t) * u; };
  sys.fx = [m](double, const Vec&, const Vec&) -> Mat { return Mat::Zero(m, m); };
  sys.f0 = [S, m](double t, const Vec& x, const Vec& u) {
    std::array<double, CompiledExpr::kMaxVars> g{};
    S->gradient(t, x.data(), nullptr, g.data());
    double sxu = 0.0;
    for (int i = 0; i < m; ++i) sxu += g[static_cast<std::size_t>(i + 1)] * u[i];
    return 0.25 * u.squaredNorm() + std::exp(-t) * sxu + g[0];
  };
  sys.f0x = [S, m](double t, const Vec& x, const Vec& u) -> Row {
    const int n = m + 1;
    std::array<double, CompiledExpr::kMaxVars> g{};
    std::array<double, CompiledExpr::kMaxVars * CompiledExpr::kMaxVars> h{};
    S->hessian(t, x.data(), nullptr, g.data(), h.data());
    const double e = std::exp(-t);
    Row r(m);
    for (int j = 0; j < m; ++j) {
      double s = h[static_cast<std::size_t>(j + 1)];  // S_{t x_j}
      for (int i = 0; i < m; ++i) s += e * h[static_cast<std::size_t>((i + 1) * n + (j + 1))] * u[i];
      r[j] = s;
    }
    return r;
  };
  sys.control_set = ControlSet::whole_space();
  sys.c0 = ConstraintSet::point(model.x_star);
  sys.c_as = ConstraintSet::whole_space();
  return sys;
}

AnalyticArc sdriven_candidate(const SDrivenModel& model, const Vec& C, double span, double spacing) {
  if (!(span > 0.0) || !std::isfinite(span)) throw Error(ErrorKind::InvalidArgument, "span must be positive and finite");
  if (!(spacing > 0.0)) throw Error(ErrorKind::InvalidArgument, "spacing must be positive");
  if (C.size() != model.m) throw Error(ErrorKind::DimensionMismatch, "C has the wrong dimension");
  const ControlSystem sys = sdriven_system(model);
  const Vec& xs = model.x_star;
  const double s0 = sdriven_S(model, 0.0, xs);
  const double c2 = C.squaredNorm();
  const auto n = static_cast<std::size_t>(std::ceil(span / spacing));
  DenseSolution path, psi;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = i == n ? span : span * static_cast<double>(i) / static_cast<double>(n);
    const double q = -std::expm1(-2.0 * t);
    const Vec y = xs + q * C;
    const Vec u = 2.0 * std::exp(-t) * C;
    Vec v(model.m + 1), dv(model.m + 1);
    v.head(model.m) = y;
    v[model.m] = sdriven_S(model, t, y) - s0 + q * c2 / 2.0;
    dv.head(model.m) = 2.0 * std::exp(-2.0 * t) * C;
    dv[model.m] = sys.f0(t, y, u);
    path.append(t, std::move(v), std::move(dv));
    const Row p = sdriven_Sx(model, t, y) + C.transpose();
    const Row dp = sys.eval_f0x(t, y, u);
    psi.append(t, p.transpose(), dp.transpose());
  }
  ControlSignal control = ControlSignal::analytic(model.m, [C](double t) -> Vec { return 2.0 * std::exp(-t) * C; });
  return {Process(std::move(path), std::move(control), model.m), CostateArc(std::move(psi), 1.0)};
}

AnalyticArc planar_optimal_process(const Vec& C, const Vec& x_star, double span) {
  return sdriven_candidate(planar_model(x_star), C, span);
}

RamseyModel ramsey_preset() { return {parse_expr("sqrt(x1)"), parse_expr("-ln(u1)"), 0.25, 1.0}; }

void ramsey_check(const RamseyModel& model, bool strict_concavity) {
  require_scalar_expr(model.f, kX1, "f");
  require_scalar_expr(model.f0, kU1, "f0");
  if (!std::isfinite(model.rho)) throw Error(ErrorKind::InvalidArgument, "rho must be finite");
  if (!(model.x_star >= 0.0)) throw Error(ErrorKind::InvalidArgument, "x* must be nonnegative");
  const Scalar1 f(model.f, kX1);
  for (double x : log_probes(1e-3, 1e3, 31)) {
    const double d2 = f.d2(x);
    if (strict_concavity ? !(d2 < 0.0) : !(d2 <= 0.0)) {
      throw Error(ErrorKind::DomainError, fmt::format("f must be concave, f'' = {:.6g} at x = {:.6g}", d2, x));
    }
  }
  if (!(f.value(0.0) <= 0.0)) throw Error(ErrorKind::DomainError, "f(0) must be <= 0");
  check_disutility(Scalar1(model.f0, kU1));
}

ControlSystem ramsey_system(const RamseyModel& model) {
  require_scalar_expr(model.f, kX1, "f");
  require_scalar_expr(model.f0, kU1, "f0");
  auto f = std::make_shared<const Scalar1>(model.f, kX1);
  auto f0 = std::make_shared<const Scalar1>(model.f0, kU1);
  const double rho = model.rho;
  ControlSystem sys;
  sys.state_dim = 1;
  sys.control_dim = 1;
  sys.f = [f](double, const Vec& x, const Vec& u) -> Vec { return Vec::Constant(1, f->value(x[0]) - u[0]); };
  sys.fx = [f](double, const Vec& x, const Vec&) -> Mat { return Mat::Constant(1, 1, f->d1(x[0])); };
  sys.f0 = [f0, rho](double t, const Vec&, const Vec& u) { return std::exp(-rho * t) * f0->value(u[0]); };
  sys.f0x = [](double, const Vec&, const Vec&) -> Row { return Row::Zero(1); };
  sys.control_set = ControlSet::box(Vec::Zero(1), Vec::Constant(1, std::numeric_limits<double>::infinity()));
  sys.c0 = ConstraintSet::point(Vec::Constant(1, model.x_star));
  sys.c_as = ConstraintSet::half_line(Vec::Constant(1, model.x_star));
  return sys;
}

RamseyStationary ramsey_stationary(const RamseyModel& model) {
  require_scalar_expr(model.f, kX1, "f");
  const Scalar1 f(model.f, kX1);
  auto g = [&](double x) { return f.d1(x) - model.rho; };
  double a = model.x_star > 0.0 ? model.x_star : 1.0;
  double ga = g(a);
  double lo = a, hi = a;
  if (ga == 0.0) {
    lo = hi = a;
  } else {
    const double factor = ga > 0.0 ? 2.0 : 0.5;
    bool found = false;
    double b = a;
    for (int i = 0; i < 60; ++i) {
      b *= factor;
      if ((g(b) > 0.0) != (ga > 0.0)) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorKind::NoBracket, fmt::format("f'(x) - rho keeps the sign of {:.6g} from x = {:.6g}", ga, a));
    }
    lo = b / factor;
    hi = b;
  }
  const double x0 = lo == hi ? lo : bracketed_newton(g, [&](double x) { return f.d2(x); }, lo, hi);
  const double u0 = f.value(x0);
  if (u0 < 0.0) {
    throw Error(ErrorKind::NegativeStationaryControl, fmt::format("f(x0) = {:.6g} < 0 at x0 = {:.6g}", u0, x0));
  }
  return {x0, u0};
}

double ramsey_eta(const RamseyModel& model, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidArgument, "eta needs p > 0");
  require_scalar_expr(model.f0, kU1, "f0");
  const Scalar1 f0(model.f0, kU1);
  check_disutility(f0);
  auto h = [&](double v) { return f0.d1(v) + p; };
  double a = 1.0;
  const double ha = h(a);
  if (ha == 0.0) return a;
  const double factor = ha < 0.0 ? 2.0 : 0.5;
  double b = a;
  bool found = false;
  for (int i = 0; i < 60; ++i) {
    b *= factor;
    if ((h(b) > 0.0) != (ha > 0.0)) {
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorKind::NoBracket, fmt::format("f0'(u) = -{:.6g} has no bracketed root", p));
  return bracketed_newton(h, [&](double v) { return f0.d2(v); }, b / factor, b);
}

std::pair<double, double> ramsey_reduced_field(const RamseyModel& model, double y, double u) {
  if (!(y >= kRamseyFloor) || !(u >= kRamseyFloor)) {
    throw Error(ErrorKind::DomainError, fmt::format("reduced field needs y, u >= 1e-9 (y = {:.6g}, u = {:.6g})", y, u));
  }
  const Scalar1 f(model.f, kX1);
  const Scalar1 f0(model.f0, kU1);
  const double d2 = f0.d2(u);
  if (d2 == 0.0) throw Error(ErrorKind::DomainError, "f0'' vanishes");
  return {f.value(y) - u, (model.rho - f.d1(y)) * f0.d1(u) / d2};
}

RamseyLinearization ramsey_linearize(const RamseyModel& model, const RamseyStationary& s) {
  const Scalar1 f(model.f, kX1);
  PointBindings at{0.0, Vec(), Vec::Constant(1, s.u0)};
  const auto d = eval_derivatives3(model.f0, at, kU1);  // f0, f0', f0'', f0'''
  if (d[2] == 0.0) throw Error(ErrorKind::DomainError, "f0'' vanishes at u0");
  const double r = d[1] / d[2];
  const double dr = (d[2] * d[2] - d[1] * d[3]) / (d[2] * d[2]);
  RamseyLinearization lin;
  lin.jacobian << f.d1(s.x0), -1.0, -f.d2(s.x0) * r, (model.rho - f.d1(s.x0)) * dr;
  const double tr = lin.jacobian.trace();
  const double det = lin.jacobian.determinant();
  const double disc = tr * tr - 4.0 * det;
  if (!(det < 0.0) || !(disc > 0.0)) {
    throw Error(ErrorKind::NotASaddle, fmt::format("stationary point is not a saddle (trace {:.6g}, det {:.6g})", tr, det));
  }
  const double sq = std::sqrt(disc);
  lin.lambda_unstable = 0.5 * (tr + sq);
  lin.lambda_stable = 0.5 * (tr - sq);
  Eigen::Vector2d v(-lin.jacobian(0, 1), lin.jacobian(0, 0) - lin.lambda_stable);
  if (v.norm() < 1e-14) v = Eigen::Vector2d(lin.jacobian(1, 1) - lin.lambda_stable, -lin.jacobian(1, 0));
  lin.stable_direction = v.normalized();
  return lin;
}

SaddlePath ramsey_saddle_path(const RamseyModel& model, double horizon, double tol) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  const RamseyStationary st = ramsey_stationary(model);
  const RamseyLinearization lin = ramsey_linearize(model, st);
  auto f = std::make_shared<const Scalar1>(model.f, kX1);
  auto f0 = std::make_shared<const Scalar1>(model.f0, kU1);
  const double rho = model.rho;
  const double xs = model.x_star;
  const double eps = 1e-6;
  const Eigen::Vector2d z0(st.x0, st.u0);

  OdeRhs field = [&model](double, const Vec& z, Vec& dz) {
    const auto [dy, du] = ramsey_reduced_field(model, z[0], z[1]);
    dz[0] = dy;
    dz[1] = du;
  };
  IntegratorOptions opts;
  opts.tol = {tol, tol};

  // Forward-time trajectory on [0, t_seed] followed by the linear tail.
  auto fwd = std::make_shared<DenseSolution>();
  double t_seed = 0.0;
  Eigen::Vector2d seed = z0;
  if (std::abs(xs - st.x0) > 1e-12 * std::max(1.0, st.x0)) {
    const double s_probe = -1.0 / std::abs(lin.lambda_stable);
    double best = std::numeric_limits<double>::infinity();
    for (double sgn : {1.0, -1.0}) {
      const Eigen::Vector2d cand = z0 + sgn * eps * lin.stable_direction;
      try {
        const DenseSolution probe = integrate_ode(field, 0.0, cand, s_probe, opts);
        const double dist = std::abs(probe.values().back()[0] - xs);
        if (dist < std::abs(cand[0] - xs) && dist < best) {
          best = dist;
          seed = cand;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DomainError) throw;
      }
    }
    if (!std::isfinite(best)) throw Error(ErrorKind::NoCrossing, "no seed direction moves towards x*");
    const double side = seed[0] - xs;
    const double s_max = -std::max(1e3, 200.0 / std::abs(lin.lambda_stable));
    DenseSolution back = integrate_ode(field, 0.0, seed, s_max, opts, [&](const DenseSolution& sol) {
      return (sol.values().back()[0] - xs) * side <= 0.0;
    });
    const auto& bt = back.times();
    const auto& bv = back.values();
    if ((bv.back()[0] - xs) * side > 0.0) {
      throw Error(ErrorKind::NoCrossing, fmt::format("backward flow did not reach x* = {:.6g}", xs));
    }
    double a = bt[bt.size() - 2], b = bt.back();  // a on the seed side
    for (int i = 0; i < 200 && std::abs(b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++i) {
      const double mid = 0.5 * (a + b);
      if ((back.at(mid)[0] - xs) * side > 0.0) {
        a = mid;
      } else {
        b = mid;
      }
    }
    const double s_cross = std::abs(back.at(a)[0] - xs) <= std::abs(back.at(b)[0] - xs) ? a : b;
    back.truncate_at(s_cross);
    back.reverse();
    t_seed = -s_cross;
    std::vector<double> ts;
    std::vector<Vec> vs, ds;
    for (std::size_t i = 0; i < back.size(); ++i) {
      const double t = back.times()[i] + t_seed;
      if (!ts.empty() && t <= ts.back()) continue;
      ts.push_back(i == 0 ? 0.0 : t);
      vs.push_back(back.values()[i]);
      ds.push_back(back.derivs()[i]);
    }
    vs.front()[0] = xs;
    ts.back() = t_seed;
    *fwd = DenseSolution(std::move(ts), std::move(vs), std::move(ds));
  }

  const double lam = lin.lambda_stable;
  auto traj = [fwd, t_seed, seed, z0, lam](double t) -> Eigen::Vector2d {
    if (t <= t_seed && fwd->size() > 1) {
      const Vec v = fwd->at(std::max(t, 0.0));
      return {v[0], v[1]};
    }
    return z0 + (seed - z0) * std::exp(lam * (t - t_seed));
  };

  const std::vector<double> breaks = t_seed > 0.0 && t_seed < horizon ? std::vector<double>{t_seed} : std::vector<double>{};
  OdeRhs cost_rhs = [&](double t, const Vec&, Vec& dw) { dw[0] = std::exp(-rho * t) * f0->value(traj(t)[1]); };
  IntegratorOptions copts = opts;
  copts.breakpoints = breaks;
  const DenseSolution W = integrate_ode(cost_rhs, 0.0, Vec::Zero(1), horizon, copts);

  std::vector<double> nodes;
  if (fwd->size() > 1) {
    for (double t : fwd->times()) {
      if (t < horizon) nodes.push_back(t);
    }
  } else {
    nodes.push_back(0.0);
  }
  const double tail_step = 0.05;
  {
    const double start = nodes.back();
    const auto n = static_cast<std::size_t>(std::ceil((horizon - start) / tail_step));
    for (std::size_t i = 1; i <= n; ++i) {
      nodes.push_back(i == n ? horizon : start + (horizon - start) * static_cast<double>(i) / static_cast<double>(n));
    }
  }

  DenseSolution path, psi;
  for (double t : nodes) {
    const Eigen::Vector2d z = traj(t);
    const double disc = std::exp(-rho * t);
    Vec v(2), dv(2);
    v << z[0], W.at(t)[0];
    dv << f->value(z[0]) - z[1], disc * f0->value(z[1]);
    path.append(t, std::move(v), std::move(dv));
    const double p = -f0->d1(z[1]) * disc;
    psi.append(t, Vec::Constant(1, p), Vec::Constant(1, -p * f->d1(z[0])));
  }
  ControlSignal control = ControlSignal::analytic(1, [traj](double t) -> Vec { return Vec::Constant(1, traj(t)[1]); }, breaks);
  SaddlePath out{Process(std::move(path), std::move(control), 1), CostateArc(std::move(psi), 1.0), st, lin, t_seed, eps};
  return out;
}

ControlSystem custom_system(const CustomModel& model) {
  const int m = model.m, k = model.k;
  if (m < 1 || k < 1) throw Error(ErrorKind::InvalidArgument, "custom model needs m >= 1 and k >= 1");
  if (m > CompiledExpr::kMaxVars) {
    throw Error(ErrorKind::InvalidArgument, fmt::format("custom models support m <= {}", CompiledExpr::kMaxVars));
  }
  if (static_cast<int>(model.f.size()) != m) throw Error(ErrorKind::DimensionMismatch, "f needs one expression per state");
  for (std::size_t i = 0; i < model.f.size(); ++i) require_dims(model.f[i], m, k, fmt::format("f[{}]", i));
  require_dims(model.f0, m, k, "f0");
  require_dims(model.l, m, 0, "l");
  if (model.l.depends_on(kT)) throw Error(ErrorKind::InvalidArgument, "l may not depend on t");

  auto fs = std::make_shared<std::vector<CompiledExpr>>();
  for (const Expr& e : model.f) fs->emplace_back(e, states(m));
  auto f0 = std::make_shared<const CompiledExpr>(model.f0, states(m));
  auto l = std::make_shared<const CompiledExpr>(model.l, states(m));

  ControlSystem sys;
  sys.state_dim = m;
  sys.control_dim = k;
  sys.f = [fs, m](double t, const Vec& x, const Vec& u) -> Vec {
    Vec r(m);
    for (int i = 0; i < m; ++i) r[i] = (*fs)[static_cast<std::size_t>(i)].value(t, x.data(), u.data());
    return r;
  };
  sys.fx = [fs, m](double t, const Vec& x, const Vec& u) -> Mat {
    Mat J(m, m);
    std::array<double, CompiledExpr::kMaxVars> g{};
    for (int i = 0; i < m; ++i) {
      (*fs)[static_cast<std::size_t>(i)].gradient(t, x.data(), u.data(), g.data());
      for (int j = 0; j < m; ++j) J(i, j) = g[static_cast<std::size_t>(j)];
    }
    return J;
  };
  sys.f0 = [f0](double t, const Vec& x, const Vec& u) { return f0->value(t, x.data(), u.data()); };
  sys.f0x = [f0, m](double t, const Vec& x, const Vec& u) -> Row {
    Row r(m);
    f0->gradient(t, x.data(), u.data(), r.data());
    return r;
  };
  sys.l = [l](const Vec& x) { return l->value(0.0, x.data(), nullptr); };
  sys.grad_l = [l, m](const Vec& x) -> Row {
    Row r(m);
    l->gradient(0.0, x.data(), nullptr, r.data());
    return r;
  };
  sys.control_set = model.control_set;
  sys.c0 = model.c0;
  sys.c_as = model.c_as;
  return sys;
}

ControlSignal custom_reference_control(const CustomModel& model) {
  if (static_cast<int>(model.u_ref.size()) != model.k) {
    throw Error(ErrorKind::DimensionMismatch, "reference control needs one expression per control");
  }
  auto us = std::make_shared<std::vector<CompiledExpr>>();
  for (const Expr& e : model.u_ref) {
    require_dims(e, 0, 0, "reference control");
    us->emplace_back(e, std::vector<VarRef>{});
  }
  const int k = model.k;
  return ControlSignal::analytic(k, [us, k](double t) -> Vec {
    Vec u(k);
    for (int i = 0; i < k; ++i) u[i] = (*us)[static_cast<std::size_t>(i)].value(t, nullptr, nullptr);
    return u;
  });
}

CustomModel stable_linear_model(double x_star) {
  CustomModel m;
  m.name = "stable-linear";
  m.m = 1;
  m.k = 1;
  m.f = {parse_expr("-x1 + u1")};
  m.f0 = parse_expr("x1^2");
  m.l = Expr::literal(0.0);
  m.control_set = ControlSet::whole_space();
  m.c0 = ConstraintSet::point(Vec::Constant(1, x_star));
  m.c_as = ConstraintSet::whole_space();
  m.x_star = Vec::Constant(1, x_star);
  m.u_ref = {Expr::literal(0.0)};
  return m;
}

}  // namespace ihoc
