#pragma once

#include <iosfwd>
#include <limits>

#include "ihoc/ode_core.hpp"

namespace ihoc {

/// Transition matrix A(t) of the variational system along a process together
/// with the accumulated gradient row g(t) = int f0_x(tau) A(tau) dtau.
class SensitivityPath {
 public:
  SensitivityPath(DenseSolution path, Eigen::Index state_dim, double max_condition);

  Eigen::Index state_dim() const { return m_; }
  double t_start() const { return path_.t_min(); }
  double t_end() const { return path_.t_max(); }
  const DenseSolution& path() const { return path_; }

  Mat A(double t) const;
  Row g(double t) const;

  /// Largest 1-norm condition number of A over the accepted nodes.
  double max_condition() const { return max_condition_; }
  /// Set when the condition number exceeded 1e12 somewhere along the path.
  bool singular_warning() const { return max_condition_ > kSingularThreshold; }

  static constexpr double kSingularThreshold = 1e12;

 private:
  DenseSolution path_;
  Eigen::Index m_;
  double max_condition_;
};

/// Co-state path psi(t) (rows) and the multiplier lambda in {0, 1}.
class CostateArc {
 public:
  CostateArc(DenseSolution path, double lambda);

  double lambda() const { return lambda_; }
  double t_start() const { return path_.t_min(); }
  double t_end() const { return path_.t_max(); }
  Eigen::Index dim() const { return path_.dim(); }
  const DenseSolution& path() const { return path_; }

  Row psi(double t) const;
  Row psi_derivative(double t) const;

 private:
  DenseSolution path_;
  double lambda_;
};

/// Integrates dA/dt = f_x A from the identity at t_start (default: the
/// process start) to theta, re-using the stored trajectory of `process`.
/// Throws NonFinite; ill-conditioning is reported through singular_warning().
SensitivityPath transition_matrix(const ControlSystem& system, const Process& process, double theta,
                                  const IntegratorOptions& options = {},
                                  double t_start = std::numeric_limits<double>::quiet_NaN());

/// dJ/dx(x0, t0, u; theta) = g(theta).
Row cost_gradient(const ControlSystem& system, const Process& process, double theta,
                  const IntegratorOptions& options = {});

/// Forward adjoint solve -dpsi/dt = psi f_x - lambda f0_x with psi(t0) = psi0,
/// up to t_end (default: the end of the process).
CostateArc integrate_adjoint(const ControlSystem& system, const Process& process, const Row& psi0,
                             double lambda, const IntegratorOptions& options = {},
                             double t_end = std::numeric_limits<double>::quiet_NaN());

/// Backward adjoint solve from psi(theta) = psi_theta down to the process start.
CostateArc costate_from_terminal(const ControlSystem& system, const Process& process,
                                 const Row& psi_theta, double theta, double lambda,
                                 const IntegratorOptions& options = {});

/// || psi(theta) A(theta) - psi(t) A(t) - (g(theta) - g(t)) ||.
double cauchy_residual(const Row& psi_t, const Row& psi_theta, const SensitivityPath& sens, double t,
                       double theta);
/// Same, reading psi from an arc with lambda = 1. Throws GridMismatch when t or
/// theta lies outside either path.
double cauchy_residual(const CostateArc& arc, const SensitivityPath& sens, double t, double theta);

/// CSV with columns t, A_i_j (row-major), g_1..g_m.
void write_sensitivity_csv(std::ostream& out, const SensitivityPath& sens);

}  // namespace ihoc
