#include "ihoc/ode.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ihoc/error.hpp"

namespace ihoc {

namespace {

void check_finite(const Vec& v, double t, const char* what) {
  if (!v.allFinite()) {
    throw Error(ErrorKind::NonFinite, fmt::format("{} became non-finite at t = {:.17g}", what, t));
  }
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output coefficients (Hairer, Norsett & Wanner, DOPRI5).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

double rms_norm(const Vec& err, const Vec& y0, const Vec& y1, const Tolerance& tol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale = tol.abs + tol.rel * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / scale;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
}

// Stops the step schedule must land on, ordered along the integration
// direction and ending with t_end.
std::vector<double> schedule_stops(double t0, double t_end, std::vector<double> breakpoints) {
  const double dir = t_end > t0 ? 1.0 : -1.0;
  std::vector<double> stops;
  for (double b : breakpoints) {
    if (dir * (b - t0) > 0.0 && dir * (t_end - b) > 0.0) stops.push_back(b);
  }
  std::sort(stops.begin(), stops.end(), [dir](double a, double b) { return dir * a < dir * b; });
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.push_back(t_end);
  return stops;
}

class Stepper {
 public:
  Stepper(const OdeRhs& rhs, Eigen::Index n) : rhs_(rhs), k_(7, Vec(n)), tmp_(n) {}

  void eval(double t, const Vec& y, Vec& out) {
    out.resize(y.size());
    rhs_(t, y, out);
    check_finite(out, t, "right-hand side");
  }

  // One Dormand-Prince step from (t, y) with k_[0] = f(t, y) already set.
  // t_last is the time used for the c = 1 stages (the left limit when the
  // step lands on a control breakpoint).
  // interp: deviation of the cubic Hermite midpoint from the method's
  // continuous extension.
  void dopri(double t, const Vec& y, double h, double t_last, Vec& y_new, Vec& err, Vec& interp) {
    auto& k = k_;
    tmp_ = y + h * (a21 * k[0]);
    eval(t + c2 * h, tmp_, k[1]);
    tmp_ = y + h * (a31 * k[0] + a32 * k[1]);
    eval(t + c3 * h, tmp_, k[2]);
    tmp_ = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
    eval(t + c4 * h, tmp_, k[3]);
    tmp_ = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
    eval(t + c5 * h, tmp_, k[4]);
    tmp_ = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
    eval(t_last, tmp_, k[5]);
    y_new = y + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
    eval(t_last, y_new, k[6]);
    err = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
    interp = (h / 16.0) * (d1 * k[0] + d3 * k[2] + d4 * k[3] + d5 * k[4] + d6 * k[5] + d7 * k[6]);
  }

  void rk4(double t, const Vec& y, double h, double t_last, Vec& y_new) {
    auto& k = k_;
    tmp_ = y + 0.5 * h * k[0];
    eval(t + 0.5 * h, tmp_, k[1]);
    tmp_ = y + 0.5 * h * k[1];
    eval(t + 0.5 * h, tmp_, k[2]);
    tmp_ = y + h * k[2];
    eval(t_last, tmp_, k[3]);
    y_new = y + (h / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
  }

  std::vector<Vec>& k() { return k_; }

 private:
  const OdeRhs& rhs_;
  std::vector<Vec> k_;
  Vec tmp_;
};

double initial_step(Stepper& stepper, double t0, const Vec& y0, const Vec& f0, double dir,
                    const Tolerance& tol) {
  const Vec zero = Vec::Zero(y0.size());
  const double d0 = rms_norm(y0, y0, y0, tol);
  const double d1 = rms_norm(f0, y0, y0, tol);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  Vec y1 = y0 + dir * h0 * f0;
  Vec f1;
  stepper.eval(t0 + dir * h0, y1, f1);
  const double d2 = rms_norm(Vec(f1 - f0), y0, y0, tol) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min(100.0 * h0, h1);
}

}  // namespace

DenseSolution::DenseSolution(std::vector<double> times, std::vector<Vec> values,
                             std::vector<Vec> derivs)
    : times_(std::move(times)), values_(std::move(values)), derivs_(std::move(derivs)) {
  if (times_.size() != values_.size() || times_.size() != derivs_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "dense solution: node arrays differ in length");
  }
}

bool DenseSolution::covers(double t) const {
  if (times_.empty()) return false;
  return t >= t_min() && t <= t_max();
}

void DenseSolution::append(double t, Vec value, Vec deriv) {
  times_.push_back(t);
  values_.push_back(std::move(value));
  derivs_.push_back(std::move(deriv));
}

void DenseSolution::reverse() {
  std::reverse(times_.begin(), times_.end());
  std::reverse(values_.begin(), values_.end());
  std::reverse(derivs_.begin(), derivs_.end());
}

std::size_t DenseSolution::segment(double t) const {
  if (!covers(t)) {
    throw Error(ErrorKind::OutOfRange,
                fmt::format("t = {:.17g} outside [{:.17g}, {:.17g}]", t, t_min(), t_max()));
  }
  if (times_.size() < 2) {
    throw Error(ErrorKind::OutOfRange, "dense solution has fewer than two nodes");
  }
  const bool increasing = times_.back() > times_.front();
  // First node strictly beyond t in node order; duplicates at breakpoints make
  // the trajectory continuous from the later side.
  auto it = increasing ? std::upper_bound(times_.begin(), times_.end(), t)
                       : std::upper_bound(times_.begin(), times_.end(), t,
                                          [](double a, double b) { return a > b; });
  std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  if (hi >= times_.size()) hi = times_.size() - 1;
  if (hi == 0) hi = 1;
  // Skip zero-length segments.
  while (hi > 1 && times_[hi] == times_[hi - 1]) --hi;
  return hi - 1;
}

Vec DenseSolution::at(double t) const {
  if (times_.size() == 1 && t == times_.front()) return values_.front();
  const std::size_t i = segment(t);
  const double h = times_[i + 1] - times_[i];
  const double s = (t - times_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * values_[i] + (s3 - 2 * s2 + s) * h * derivs_[i] +
         (-2 * s3 + 3 * s2) * values_[i + 1] + (s3 - s2) * h * derivs_[i + 1];
}

Vec DenseSolution::derivative_at(double t) const {
  if (times_.size() == 1 && t == times_.front()) return derivs_.front();
  const std::size_t i = segment(t);
  const double h = times_[i + 1] - times_[i];
  const double s = (t - times_[i]) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * values_[i] + (3 * s2 - 4 * s + 1) * h * derivs_[i] +
          (-6 * s2 + 6 * s) * values_[i + 1] + (3 * s2 - 2 * s) * h * derivs_[i + 1]) /
         h;
}

void DenseSolution::truncate_at(double t) {
  const Vec value = at(t);
  const Vec deriv = derivative_at(t);
  const bool increasing = times_.back() > times_.front();
  while (!times_.empty() && (increasing ? times_.back() >= t : times_.back() <= t)) {
    times_.pop_back();
    values_.pop_back();
    derivs_.pop_back();
  }
  append(t, value, deriv);
}

DenseSolution integrate_ode(const OdeRhs& rhs, double t0, const Vec& y0, double t_end,
                            const IntegratorOptions& options, const StepObserver& observer) {
  if (!std::isfinite(t0) || !std::isfinite(t_end) || t0 == t_end) {
    throw Error(ErrorKind::InvalidArgument, "integrate_ode: need finite t0 != t_end");
  }
  check_finite(y0, t0, "initial state");
  const double dir = t_end > t0 ? 1.0 : -1.0;
  const std::vector<double> stops = schedule_stops(t0, t_end, options.breakpoints);

  Stepper stepper(rhs, y0.size());
  DenseSolution sol;
  double t = t0;
  Vec y = y0;
  Vec f;
  stepper.eval(t, y, f);
  sol.append(t, y, f);

  const bool adaptive = options.scheme == Scheme::DormandPrince45;
  double h = 0.0;
  if (adaptive) {
    h = options.initial_step > 0.0 ? options.initial_step
                                   : initial_step(stepper, t, y, f, dir, options.tol);
  } else {
    if (!(options.fixed_step > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "Rk4 needs a positive fixed_step");
    }
    h = options.fixed_step;
  }
  if (options.max_step > 0.0) h = std::min(h, options.max_step);

  Vec y_new(y.size()), err(y.size()), interp(y.size());
  std::size_t stop_index = 0;
  long steps = 0;
  bool rejected_last = false;
  while (stop_index < stops.size()) {
    const double stop = stops[stop_index];
    if (++steps > options.max_steps) {
      throw Error(ErrorKind::NoConvergence,
                  fmt::format("step budget exhausted at t = {:.17g}", t));
    }
    const double remaining = dir * (stop - t);
    bool lands = false;
    double step = h;
    if (step >= remaining * (1.0 - 1e-12) || remaining - step < 1e-12 * std::max(1.0, std::abs(t))) {
      step = remaining;
      lands = true;
    }
    const double t_next = lands ? stop : t + dir * step;
    const double signed_step = t_next - t;
    // Stages at the end of a step that lands on a breakpoint see the control
    // from the side the step comes from.
    const bool at_breakpoint = lands && stop_index + 1 < stops.size();
    const double t_last = at_breakpoint ? std::nextafter(t_next, t) : t_next;

    stepper.k()[0] = f;
    if (adaptive) {
      const double min_step = options.min_step * std::max(1.0, std::abs(t));
      if (std::abs(signed_step) < min_step && !lands) {
        throw Error(ErrorKind::StepUnderflow,
                    fmt::format("adaptive step {:.3g} below minimum at t = {:.17g}", step, t));
      }
      stepper.dopri(t, y, signed_step, t_last, y_new, err, interp);
      double e = rms_norm(err, y, y_new, options.tol);
      if (options.control_dense_error) e = std::max(e, rms_norm(interp, y, y_new, options.tol));
      if (!std::isfinite(e)) {
        throw Error(ErrorKind::NonFinite, fmt::format("error estimate non-finite at t = {:.17g}", t));
      }
      if (e > 1.0) {
        h = step * std::max(0.2, 0.9 * std::pow(e, -0.2));
        rejected_last = true;
        if (h < min_step) {
          throw Error(ErrorKind::StepUnderflow,
                      fmt::format("adaptive step {:.3g} below minimum at t = {:.17g}", h, t));
        }
        continue;
      }
      double factor = e == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(e, -0.2)));
      if (rejected_last) factor = std::min(factor, 1.0);
      rejected_last = false;
      if (!lands) h = step * factor;
      else h = std::max(h, step * factor);
      if (options.max_step > 0.0) h = std::min(h, options.max_step);
      f = stepper.k()[6];
    } else {
      stepper.rk4(t, y, signed_step, t_last, y_new);
      stepper.eval(t_last, y_new, f);
    }
    check_finite(y_new, t_next, "state");
    t = t_next;
    y = y_new;
    sol.append(t, y, f);
    if (lands) {
      ++stop_index;
      if (at_breakpoint) {
        // Duplicate node carrying the derivative on the far side of the jump.
        stepper.eval(t, y, f);
        sol.append(t, y, f);
      }
    }
    if (observer && observer(sol)) break;
  }
  return sol;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::SingularA: return "SingularA";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::PointNotInSet: return "PointNotInSet";
    case ErrorKind::ControlOutOfSet: return "ControlOutOfSet";
    case ErrorKind::EmptyLevel: return "EmptyLevel";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NegativeStationaryControl: return "NegativeStationaryControl";
    case ErrorKind::NotASaddle: return "NotASaddle";
    case ErrorKind::NoCrossing: return "NoCrossing";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> offset)
    : std::runtime_error(what), kind_(kind), offset_(offset) {}

}  // namespace ihoc
