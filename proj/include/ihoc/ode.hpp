#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "ihoc/types.hpp"

namespace ihoc {

/// Right-hand side y' = rhs(t, y). Implementations write into dydt, which is
/// pre-sized to y.size().
using OdeRhs = std::function<void(double t, const Vec& y, Vec& dydt)>;

enum class Scheme { DormandPrince45, Rk4 };

/// Piecewise cubic Hermite trajectory built from node values and node
/// derivatives. Node times are strictly monotone, in either direction.
class DenseSolution {
 public:
  DenseSolution() = default;
  DenseSolution(std::vector<double> times, std::vector<Vec> values, std::vector<Vec> derivs);

  std::size_t size() const { return times_.size(); }
  Eigen::Index dim() const { return values_.empty() ? 0 : values_.front().size(); }
  double t_front() const { return times_.front(); }
  double t_back() const { return times_.back(); }
  double t_min() const { return std::min(times_.front(), times_.back()); }
  double t_max() const { return std::max(times_.front(), times_.back()); }
  bool covers(double t) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec>& values() const { return values_; }
  const std::vector<Vec>& derivs() const { return derivs_; }

  /// Interpolated value; throws OutOfRange outside [t_min, t_max].
  Vec at(double t) const;
  /// Interpolated time derivative (derivative of the Hermite cubic).
  Vec derivative_at(double t) const;

  void append(double t, Vec value, Vec deriv);
  void reverse();
  /// Drops nodes beyond t (in node order) and closes the trajectory with the
  /// interpolated node at t.
  void truncate_at(double t);

 private:
  std::size_t segment(double t) const;

  std::vector<double> times_;
  std::vector<Vec> values_;
  std::vector<Vec> derivs_;
};

struct IntegratorOptions {
  Tolerance tol{};
  Scheme scheme = Scheme::DormandPrince45;
  double fixed_step = 1e-2;  // Rk4 only
  double initial_step = 0.0;  // 0: automatic
  double max_step = 0.0;      // 0: unbounded
  double min_step = 1e-12;    // relative to max(1, |t|)
  long max_steps = 50'000'000;
  /// Also bound the error of the cubic Hermite interpolant between nodes.
  bool control_dense_error = true;
  /// Times the step schedule must land on exactly (control breakpoints).
  std::vector<double> breakpoints;
};

/// Called after every accepted step with the solution so far; returning true
/// stops the integration at the current node.
using StepObserver = std::function<bool(const DenseSolution&)>;

/// Integrates from (t0, y0) to t_end. t_end < t0 integrates backward in time
/// and the nodes are then in decreasing time order. Throws NonFinite and
/// StepUnderflow.
DenseSolution integrate_ode(const OdeRhs& rhs, double t0, const Vec& y0, double t_end,
                            const IntegratorOptions& options, const StepObserver& observer = {});

}  // namespace ihoc
