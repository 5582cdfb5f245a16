#include "ihoc/ode_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ihoc/error.hpp"

namespace ihoc {

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "time grid needs at least two nodes");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) {
      throw Error(ErrorKind::InvalidArgument, "time grid node is not finite");
    }
    if (i > 0 && !(nodes_[i] > nodes_[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "time grid nodes must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t intervals) {
  if (intervals == 0) throw Error(ErrorKind::InvalidArgument, "uniform grid needs intervals > 0");
  std::vector<double> nodes(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    nodes[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(intervals);
  }
  nodes.back() = t1;
  return TimeGrid(std::move(nodes));
}

ControlSet ControlSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size()) {
    throw Error(ErrorKind::DimensionMismatch, "control box bounds differ in size");
  }
  ControlSet s;
  s.kind = Kind::Box;
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  return s;
}

ControlSet ControlSet::finite(std::vector<Vec> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyGrid, "finite control set is empty");
  ControlSet s;
  s.kind = Kind::Finite;
  s.values = std::move(values);
  return s;
}

bool ControlSet::contains(const Vec& u, double tol) const {
  switch (kind) {
    case Kind::WholeSpace:
      return u.allFinite();
    case Kind::Box:
      if (u.size() != lower.size()) return false;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u[i] < lower[i] - tol || u[i] > upper[i] + tol) return false;
      }
      return true;
    case Kind::Finite:
      return std::any_of(values.begin(), values.end(), [&](const Vec& v) {
        return v.size() == u.size() && (v - u).lpNorm<Eigen::Infinity>() <= tol;
      });
  }
  return false;
}

ConstraintSet ConstraintSet::half_line(Vec lower_bounds) {
  ConstraintSet s;
  s.kind = Kind::HalfLine;
  s.upper = Vec::Constant(lower_bounds.size(), std::numeric_limits<double>::infinity());
  s.lower = std::move(lower_bounds);
  return s;
}

ConstraintSet ConstraintSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size()) {
    throw Error(ErrorKind::DimensionMismatch, "constraint box bounds differ in size");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (lower[i] > upper[i]) throw Error(ErrorKind::InvalidArgument, "empty constraint box");
  }
  ConstraintSet s;
  s.kind = Kind::Box;
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  return s;
}

ConstraintSet ConstraintSet::point(Vec p) {
  ConstraintSet s;
  s.kind = Kind::Point;
  s.lower = p;
  s.upper = std::move(p);
  return s;
}

bool ConstraintSet::contains(const Vec& x, double tol) const {
  if (kind == Kind::WholeSpace) return x.allFinite();
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

ControlSignal ControlSignal::analytic(Eigen::Index dim, Fn fn, std::vector<double> breakpoints) {
  if (dim < 1) throw Error(ErrorKind::InvalidArgument, "control dimension must be >= 1");
  ControlSignal s;
  s.dim_ = dim;
  s.fn_ = std::move(fn);
  s.breakpoints_ = std::move(breakpoints);
  return s;
}

ControlSignal ControlSignal::piecewise_constant(TimeGrid grid, std::vector<Vec> values) {
  if (values.size() + 1 != grid.size()) {
    throw Error(ErrorKind::DimensionMismatch, "grid control needs one value per grid interval");
  }
  const Eigen::Index dim = values.front().size();
  for (const Vec& v : values) {
    if (v.size() != dim) throw Error(ErrorKind::DimensionMismatch, "grid control values differ in size");
  }
  ControlSignal s;
  s.dim_ = dim;
  s.breakpoints_.assign(grid.nodes().begin() + 1, grid.nodes().end() - 1);
  s.grid_ = std::make_shared<const TimeGrid>(std::move(grid));
  s.values_ = std::make_shared<const std::vector<Vec>>(std::move(values));
  return s;
}

ControlSignal ControlSignal::constant(Vec value) {
  const Eigen::Index dim = value.size();
  return analytic(dim, [value = std::move(value)](double) { return value; });
}

Vec ControlSignal::operator()(double t) const {
  if (grid_) {
    const auto& nodes = grid_->nodes();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    std::size_t idx = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    idx = std::min(idx, values_->size() - 1);
    return (*values_)[idx];
  }
  if (!fn_) throw Error(ErrorKind::InvalidArgument, "empty control signal");
  return fn_(t);
}

double fd_step(const Vec& x) { return std::max(1e-6, 1e-8 * x.norm()); }

Mat ControlSystem::eval_fx(double t, const Vec& x, const Vec& u) const {
  if (fx) return fx(t, x, u);
  const double h = fd_step(x);
  Mat J(state_dim, state_dim);
  Vec xp = x, xm = x;
  for (Eigen::Index j = 0; j < state_dim; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    J.col(j) = (f(t, xp, u) - f(t, xm, u)) / (2 * h);
    xp[j] = xm[j] = x[j];
  }
  return J;
}

Row ControlSystem::eval_f0x(double t, const Vec& x, const Vec& u) const {
  if (f0x) return f0x(t, x, u);
  const double h = fd_step(x);
  Row g(state_dim);
  Vec xp = x, xm = x;
  for (Eigen::Index j = 0; j < state_dim; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    g[j] = (f0(t, xp, u) - f0(t, xm, u)) / (2 * h);
    xp[j] = xm[j] = x[j];
  }
  return g;
}

double ControlSystem::eval_l(const Vec& x) const { return l ? l(x) : 0.0; }

Row ControlSystem::eval_grad_l(const Vec& x) const {
  if (grad_l) return grad_l(x);
  if (!l) return Row::Zero(state_dim);
  const double h = fd_step(x);
  Row g(state_dim);
  Vec xp = x, xm = x;
  for (Eigen::Index j = 0; j < state_dim; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    g[j] = (l(xp) - l(xm)) / (2 * h);
    xp[j] = xm[j] = x[j];
  }
  return g;
}

void ControlSystem::validate() const {
  if (state_dim < 1 || control_dim < 1) {
    throw Error(ErrorKind::InvalidArgument, "control system needs m >= 1 and k >= 1");
  }
  if (!f || !f0) throw Error(ErrorKind::InvalidArgument, "control system needs f and f0");
}

double jacobian_consistency(const ControlSystem& system,
                            std::span<const std::tuple<double, Vec, Vec>> probes) {
  ControlSystem fd = system;
  fd.fx = nullptr;
  fd.f0x = nullptr;
  double worst = 0.0;
  for (const auto& [t, x, u] : probes) {
    const Mat a = system.eval_fx(t, x, u), b = fd.eval_fx(t, x, u);
    worst = std::max(worst, (a - b).norm() / std::max(1.0, b.norm()));
    const Row g = system.eval_f0x(t, x, u), h = fd.eval_f0x(t, x, u);
    worst = std::max(worst, (g - h).norm() / std::max(1.0, h.norm()));
  }
  return worst;
}

Process::Process(DenseSolution path, ControlSignal control, Eigen::Index state_dim)
    : path_(std::move(path)), control_(std::move(control)), state_dim_(state_dim) {
  if (path_.size() < 2 || path_.dim() != state_dim_ + 1) {
    throw Error(ErrorKind::DimensionMismatch, "process path must hold [y; w] on >= 2 nodes");
  }
  if (path_.t_back() < path_.t_front()) path_.reverse();
  x0_ = path_.values().front().head(state_dim_);
}

TimeGrid Process::grid() const {
  std::vector<double> t = path_.times();
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return TimeGrid(std::move(t));
}

Vec Process::state_at(double t) const { return path_.at(t).head(state_dim_); }

Vec Process::state_derivative_at(double t) const {
  return path_.derivative_at(t).head(state_dim_);
}

double Process::cost_at(double t) const { return path_.at(t)[state_dim_]; }

Process integrate_process(const ControlSystem& system, const Vec& x0, double t0,
                          const ControlSignal& u, double t_end, const IntegratorOptions& options) {
  system.validate();
  if (x0.size() != system.state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "initial state has wrong dimension");
  }
  if (u.dim() != system.control_dim) {
    throw Error(ErrorKind::DimensionMismatch, "control signal has wrong dimension");
  }
  if (!(t_end > t0)) throw Error(ErrorKind::InvalidArgument, "integrate_process needs t_end > t0");
  const Eigen::Index m = system.state_dim;
  OdeRhs rhs = [&](double t, const Vec& y, Vec& dydt) {
    const Vec x = y.head(m);
    const Vec uv = u(t);
    if (!system.control_set.contains(uv)) {
      throw Error(ErrorKind::ControlOutOfSet, fmt::format("control leaves U at t = {:.17g}", t));
    }
    dydt.head(m) = system.f(t, x, uv);
    dydt[m] = system.f0(t, x, uv);
  };
  IntegratorOptions opts = options;
  opts.breakpoints.insert(opts.breakpoints.end(), u.breakpoints().begin(), u.breakpoints().end());
  Vec y0(m + 1);
  y0.head(m) = x0;
  y0[m] = 0.0;
  return Process(integrate_ode(rhs, t0, y0, t_end, opts), u, m);
}

double eval_cost(const Process& process, double theta) { return process.cost_at(theta); }

double hamiltonian(const ControlSystem& system, const Vec& x, const Row& psi, const Vec& u,
                   double lambda, double t) {
  const double value = psi.dot(system.f(t, x, u)) - lambda * system.f0(t, x, u);
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::NonFinite, fmt::format("Hamiltonian non-finite at t = {:.17g}", t));
  }
  return value;
}

void write_process_csv(std::ostream& out, const Process& process) {
  const Eigen::Index m = process.state_dim();
  out << "t";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",y_" << i;
  out << ",w\n";
  const auto& times = process.path().times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && times[i] == times[i - 1]) continue;
    const Vec& v = process.path().values()[i];
    fmt::print(out, "{:.16e}", times[i]);
    for (Eigen::Index j = 0; j <= m; ++j) fmt::print(out, ",{:.16e}", v[j]);
    out << '\n';
  }
}

}  // namespace ihoc
