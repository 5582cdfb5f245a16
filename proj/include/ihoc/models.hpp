#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ihoc/expr.hpp"
#include "ihoc/ode_core.hpp"
#include "ihoc/variational.hpp"

namespace ihoc {

/// Problem generated by a function S(t, x): f = e^{-t} u,
/// f0 = |u|^2/4 + e^{-t} S_x(t, x) u + S_t(t, x).
struct SDrivenModel {
  std::string name;
  int m = 1;
  Expr S;
  Vec x_star;
};

/// S = x1 sin(t) - x2 cos(t), x* = (0, 0).
SDrivenModel planar_model(Vec x_star = Vec::Zero(2));
/// S = e^{-t} sin(e^t x1) - e^{-x1^2}, x* = 0.
SDrivenModel oscillator_model();

/// Throws DomainError when S cannot be differentiated twice at x*.
ControlSystem sdriven_system(const SDrivenModel& model);

double sdriven_S(const SDrivenModel& model, double t, const Vec& x);
Row sdriven_Sx(const SDrivenModel& model, double t, const Vec& x);

struct AnalyticArc {
  Process process;
  CostateArc arc;
};

/// The process y = x* + (1 - e^{-2t}) C, u = 2 e^{-t} C with co-state
/// psi = S_x(t, y) + C and lambda = 1, sampled on [0, span] (no integration).
AnalyticArc sdriven_candidate(const SDrivenModel& model, const Vec& C, double span,
                              double spacing = 1e-2);
AnalyticArc planar_optimal_process(const Vec& C, const Vec& x_star, double span);

/// Scalar growth model: dy = f(y) - u, f0 = e^{-rho t} f0(u), y(0) = x*,
/// asymptotic constraint y >= x*.
struct RamseyModel {
  Expr f;   // in x1
  Expr f0;  // in u1
  double rho = 0.25;
  double x_star = 1.0;
};

/// f = sqrt(x), f0 = -ln(u), rho = 0.25, x* = 1.
RamseyModel ramsey_preset();

/// Probes f'' <= 0 (< 0 when strict), f0' < 0, f0'' > 0 and f(0) <= 0.
/// Throws DomainError naming the first violated hypothesis.
void ramsey_check(const RamseyModel& model, bool strict_concavity = false);

ControlSystem ramsey_system(const RamseyModel& model);

struct RamseyStationary {
  double x0 = 0.0;
  double u0 = 0.0;
};
/// Root of f'(x) = rho. Throws NoBracket, NegativeStationaryControl.
RamseyStationary ramsey_stationary(const RamseyModel& model);

/// Solution of f0'(v) = -p. Throws NoBracket, DomainError.
double ramsey_eta(const RamseyModel& model, double p);

/// (dy, du) of the reduced system. Throws DomainError for y or u below 1e-9.
std::pair<double, double> ramsey_reduced_field(const RamseyModel& model, double y, double u);

struct RamseyLinearization {
  Eigen::Matrix2d jacobian;
  double lambda_unstable = 0.0;
  double lambda_stable = 0.0;
  Eigen::Vector2d stable_direction;  // unit vector
};
/// Jacobian of the reduced field at the stationary point. Throws NotASaddle.
RamseyLinearization ramsey_linearize(const RamseyModel& model, const RamseyStationary& s);

struct SaddlePath {
  Process process;
  CostateArc arc;
  RamseyStationary stationary;
  RamseyLinearization linearization;
  double t_seed = 0.0;  // time at which the path reaches the seed near (x0, u0)
  double seed_offset = 1e-6;
};
/// Stable-manifold trajectory from x* over [0, horizon], with psi = -f0'(u) e^{-rho t}.
/// Throws NotASaddle, NoCrossing, DomainError.
SaddlePath ramsey_saddle_path(const RamseyModel& model, double horizon, double tol = 1e-10);

/// Model given directly by expressions.
struct CustomModel {
  std::string name;
  int m = 1;
  int k = 1;
  std::vector<Expr> f;
  Expr f0;
  Expr l;
  ControlSet control_set;
  ConstraintSet c0;
  ConstraintSet c_as;
  Vec x_star;
  /// Reference control, evaluated as an expression of t.
  std::vector<Expr> u_ref;
};

ControlSystem custom_system(const CustomModel& model);
ControlSignal custom_reference_control(const CustomModel& model);

/// f = -y + u, f0 = y^2, u_ref = 0 from x* (defaults to 1).
CustomModel stable_linear_model(double x_star = 1.0);

}  // namespace ihoc
