#include "ihoc/variational.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ihoc/error.hpp"

namespace ihoc {

namespace {

double condition_1norm(const Mat& A) {
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  const Mat inv = lu.inverse();
  return A.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff();
}

IntegratorOptions with_control_breaks(const IntegratorOptions& options, const Process& process) {
  IntegratorOptions opts = options;
  const auto& bp = process.control().breakpoints();
  opts.breakpoints.insert(opts.breakpoints.end(), bp.begin(), bp.end());
  return opts;
}

void require_within(const Process& process, double t, const char* what) {
  if (!(t >= process.t0() && t <= process.t_end())) {
    throw Error(ErrorKind::OutOfRange,
                fmt::format("{} = {:.17g} outside the process span [{:.17g}, {:.17g}]", what, t,
                            process.t0(), process.t_end()));
  }
}

}  // namespace

SensitivityPath::SensitivityPath(DenseSolution path, Eigen::Index state_dim, double max_condition)
    : path_(std::move(path)), m_(state_dim), max_condition_(max_condition) {
  if (path_.dim() != m_ * m_ + m_) {
    throw Error(ErrorKind::DimensionMismatch, "sensitivity path must hold vec(A) and g");
  }
  if (path_.t_back() < path_.t_front()) path_.reverse();
}

Mat SensitivityPath::A(double t) const {
  const Vec v = path_.at(t);
  return Eigen::Map<const Mat>(v.data(), m_, m_);
}

Row SensitivityPath::g(double t) const { return path_.at(t).tail(m_).transpose(); }

CostateArc::CostateArc(DenseSolution path, double lambda) : path_(std::move(path)), lambda_(lambda) {
  if (lambda_ != 0.0 && lambda_ != 1.0) {
    throw Error(ErrorKind::InvalidArgument, "lambda must be 0 or 1");
  }
  if (path_.size() > 1 && path_.t_back() < path_.t_front()) path_.reverse();
}

Row CostateArc::psi(double t) const { return path_.at(t).transpose(); }

Row CostateArc::psi_derivative(double t) const { return path_.derivative_at(t).transpose(); }

SensitivityPath transition_matrix(const ControlSystem& system, const Process& process, double theta,
                                  const IntegratorOptions& options, double t_start) {
  if (std::isnan(t_start)) t_start = process.t0();
  require_within(process, t_start, "t_start");
  require_within(process, theta, "theta");
  const Eigen::Index m = system.state_dim;
  const Eigen::Index mm = m * m;
  Vec y0(mm + m);
  Eigen::Map<Mat>(y0.data(), m, m).setIdentity();
  y0.tail(m).setZero();
  if (theta == t_start) {
    DenseSolution trivial;
    trivial.append(t_start, y0, Vec::Zero(mm + m));
    return SensitivityPath(std::move(trivial), m, 1.0);
  }
  if (theta < t_start) throw Error(ErrorKind::InvalidArgument, "transition_matrix needs theta >= t_start");

  OdeRhs rhs = [&](double t, const Vec& y, Vec& dydt) {
    const Vec x = process.state_at(t);
    const Vec u = process.control()(t);
    const Mat F = system.eval_fx(t, x, u);
    const Eigen::Map<const Mat> A(y.data(), m, m);
    Eigen::Map<Mat>(dydt.data(), m, m) = F * A;
    dydt.tail(m) = (system.eval_f0x(t, x, u) * A).transpose();
  };
  DenseSolution sol = integrate_ode(rhs, t_start, y0, theta, with_control_breaks(options, process));
  double max_cond = 1.0;
  for (const Vec& v : sol.values()) {
    max_cond = std::max(max_cond, condition_1norm(Eigen::Map<const Mat>(v.data(), m, m)));
  }
  return SensitivityPath(std::move(sol), m, max_cond);
}

Row cost_gradient(const ControlSystem& system, const Process& process, double theta,
                  const IntegratorOptions& options) {
  return transition_matrix(system, process, theta, options).g(theta);
}

namespace {

OdeRhs adjoint_rhs(const ControlSystem& system, const Process& process, double lambda) {
  return [&system, &process, lambda](double t, const Vec& y, Vec& dydt) {
    const Vec x = process.state_at(t);
    const Vec u = process.control()(t);
    const Row psi = y.transpose();
    dydt = (lambda * system.eval_f0x(t, x, u) - psi * system.eval_fx(t, x, u)).transpose();
  };
}

}  // namespace

CostateArc integrate_adjoint(const ControlSystem& system, const Process& process, const Row& psi0,
                             double lambda, const IntegratorOptions& options, double t_end) {
  if (std::isnan(t_end)) t_end = process.t_end();
  require_within(process, t_end, "t_end");
  if (psi0.size() != system.state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "psi0 has wrong dimension");
  }
  const OdeRhs rhs = adjoint_rhs(system, process, lambda);
  return CostateArc(integrate_ode(rhs, process.t0(), psi0.transpose(), t_end,
                                  with_control_breaks(options, process)),
                    lambda);
}

CostateArc costate_from_terminal(const ControlSystem& system, const Process& process,
                                 const Row& psi_theta, double theta, double lambda,
                                 const IntegratorOptions& options) {
  require_within(process, theta, "theta");
  if (psi_theta.size() != system.state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "psi_theta has wrong dimension");
  }
  if (theta == process.t0()) {
    DenseSolution single;
    single.append(theta, psi_theta.transpose(), Vec::Zero(psi_theta.size()));
    return CostateArc(std::move(single), lambda);
  }
  const OdeRhs rhs = adjoint_rhs(system, process, lambda);
  return CostateArc(integrate_ode(rhs, theta, psi_theta.transpose(), process.t0(),
                                  with_control_breaks(options, process)),
                    lambda);
}

double cauchy_residual(const Row& psi_t, const Row& psi_theta, const SensitivityPath& sens, double t,
                       double theta) {
  if (t > theta) throw Error(ErrorKind::InvalidArgument, "cauchy_residual needs t <= theta");
  if (!sens.path().covers(t) || !sens.path().covers(theta)) {
    throw Error(ErrorKind::GridMismatch, "t or theta outside the sensitivity path");
  }
  const Row lhs = psi_theta * sens.A(theta) - psi_t * sens.A(t);
  return (lhs - (sens.g(theta) - sens.g(t))).norm();
}

double cauchy_residual(const CostateArc& arc, const SensitivityPath& sens, double t, double theta) {
  if (arc.lambda() != 1.0) {
    throw Error(ErrorKind::InvalidArgument, "cauchy_residual applies to arcs with lambda = 1");
  }
  if (!arc.path().covers(t) || !arc.path().covers(theta)) {
    throw Error(ErrorKind::GridMismatch, "t or theta outside the co-state arc");
  }
  return cauchy_residual(arc.psi(t), arc.psi(theta), sens, t, theta);
}

void write_sensitivity_csv(std::ostream& out, const SensitivityPath& sens) {
  const Eigen::Index m = sens.state_dim();
  out << "t";
  for (Eigen::Index i = 1; i <= m; ++i) {
    for (Eigen::Index j = 1; j <= m; ++j) out << ",A_" << i << '_' << j;
  }
  for (Eigen::Index i = 1; i <= m; ++i) out << ",g_" << i;
  out << '\n';
  const auto& times = sens.path().times();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && times[k] == times[k - 1]) continue;
    const Vec& v = sens.path().values()[k];
    const Eigen::Map<const Mat> A(v.data(), m, m);
    fmt::print(out, "{:.16e}", times[k]);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) fmt::print(out, ",{:.16e}", A(i, j));
    }
    for (Eigen::Index i = 0; i < m; ++i) fmt::print(out, ",{:.16e}", v[m * m + i]);
    out << '\n';
  }
}

}  // namespace ihoc
