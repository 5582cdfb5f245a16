#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <tuple>
#include <vector>

#include "ihoc/ode.hpp"
#include "ihoc/types.hpp"

namespace ihoc {

/// Strictly increasing, finite sequence of at least two times.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes);

  static TimeGrid uniform(double t0, double t1, std::size_t intervals);

  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  double operator[](std::size_t i) const { return nodes_[i]; }

 private:
  std::vector<double> nodes_;
};

/// Admissible control values U.
struct ControlSet {
  enum class Kind { WholeSpace, Box, Finite };

  Kind kind = Kind::WholeSpace;
  Vec lower;                // Box
  Vec upper;                // Box
  std::vector<Vec> values;  // Finite

  static ControlSet whole_space() { return {}; }
  static ControlSet box(Vec lower, Vec upper);
  static ControlSet finite(std::vector<Vec> values);

  bool contains(const Vec& u, double tol = 1e-12) const;
};

/// Analytic descriptor for the boundary sets C0 and C_as. HalfLine and Box
/// are both stored as per-axis bounds (infinite bounds mean a free axis).
struct ConstraintSet {
  enum class Kind { WholeSpace, HalfLine, Box, Point };

  Kind kind = Kind::WholeSpace;
  Vec lower;
  Vec upper;

  static ConstraintSet whole_space() { return {}; }
  /// {x : x_i >= a_i}; use -infinity for unconstrained coordinates.
  static ConstraintSet half_line(Vec lower_bounds);
  static ConstraintSet box(Vec lower, Vec upper);
  static ConstraintSet point(Vec p);

  bool contains(const Vec& x, double tol = 1e-9) const;
};

/// A control signal: either an analytic map t -> u or piecewise-constant,
/// right-continuous values on a grid (one value per interval).
class ControlSignal {
 public:
  using Fn = std::function<Vec(double)>;

  ControlSignal() = default;
  static ControlSignal analytic(Eigen::Index dim, Fn fn, std::vector<double> breakpoints = {});
  static ControlSignal piecewise_constant(TimeGrid grid, std::vector<Vec> values);
  static ControlSignal constant(Vec value);

  Vec operator()(double t) const;
  Eigen::Index dim() const { return dim_; }
  bool is_grid() const { return grid_ != nullptr; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

 private:
  Eigen::Index dim_ = 0;
  Fn fn_;
  std::shared_ptr<const TimeGrid> grid_;
  std::shared_ptr<const std::vector<Vec>> values_;
  std::vector<double> breakpoints_;
};

/// Dynamics f, integrand f0, initial cost l and their x-derivatives. fx and
/// f0x are optional; missing Jacobians fall back to central differences.
struct ControlSystem {
  using VecFn = std::function<Vec(double t, const Vec& x, const Vec& u)>;
  using ScalarFn = std::function<double(double t, const Vec& x, const Vec& u)>;
  using MatFn = std::function<Mat(double t, const Vec& x, const Vec& u)>;
  using RowFn = std::function<Row(double t, const Vec& x, const Vec& u)>;

  Eigen::Index state_dim = 1;
  Eigen::Index control_dim = 1;
  VecFn f;
  ScalarFn f0;
  MatFn fx;
  RowFn f0x;
  std::function<double(const Vec&)> l;
  std::function<Row(const Vec&)> grad_l;
  ControlSet control_set;
  ConstraintSet c0;
  ConstraintSet c_as;

  Mat eval_fx(double t, const Vec& x, const Vec& u) const;
  Row eval_f0x(double t, const Vec& x, const Vec& u) const;
  double eval_l(const Vec& x) const;
  Row eval_grad_l(const Vec& x) const;

  /// Throws InvalidArgument when dimensions or required callables are missing.
  void validate() const;
};

/// Finite-difference step used by the Jacobian fallback.
double fd_step(const Vec& x);

/// Worst relative deviation of the supplied fx/f0x from central finite
/// differences over the probe points (t, x, u).
double jacobian_consistency(const ControlSystem& system,
                            std::span<const std::tuple<double, Vec, Vec>> probes);

/// State trajectory, running cost w(t) = J(x0, t0, u; t) and the generating
/// control, with Hermite dense output.
class Process {
 public:
  /// `path` holds [y; w] per node with matching derivatives.
  Process(DenseSolution path, ControlSignal control, Eigen::Index state_dim);

  Eigen::Index state_dim() const { return state_dim_; }
  double t0() const { return path_.t_min(); }
  double t_end() const { return path_.t_max(); }
  TimeGrid grid() const;
  const Vec& initial_state() const { return x0_; }
  const ControlSignal& control() const { return control_; }
  const DenseSolution& path() const { return path_; }

  Vec state_at(double t) const;
  Vec state_derivative_at(double t) const;
  double cost_at(double t) const;

  /// Node-wise views (duplicate breakpoint nodes included).
  std::vector<double> times() const { return path_.times(); }
  Vec state_node(std::size_t i) const { return path_.values()[i].head(state_dim_); }
  double cost_node(std::size_t i) const { return path_.values()[i][state_dim_]; }

 private:
  DenseSolution path_;
  ControlSignal control_;
  Eigen::Index state_dim_;
  Vec x0_;
};

/// Integrates the state equation and the running cost from (t0, x0) to
/// t_end under control u. Throws NonFinite, StepUnderflow, ControlOutOfSet.
Process integrate_process(const ControlSystem& system, const Vec& x0, double t0,
                          const ControlSignal& u, double t_end, const IntegratorOptions& options = {});

/// J(x0, t0, u; theta) by dense interpolation. Throws OutOfRange.
double eval_cost(const Process& process, double theta);

/// H = psi . f(t, x, u) - lambda * f0(t, x, u). Throws NonFinite.
double hamiltonian(const ControlSystem& system, const Vec& x, const Row& psi, const Vec& u,
                   double lambda, double t);

/// CSV with columns t, y_1..y_m, w in 17-significant-digit scientific notation.
void write_process_csv(std::ostream& out, const Process& process);

}  // namespace ihoc
