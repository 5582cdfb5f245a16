#include "ihoc/transversality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "ihoc/error.hpp"

namespace ihoc {

namespace {

std::vector<double> to_vector(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
std::vector<double> to_vector(const Row& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t level, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

// Uniform point in the ball of radius r.
Vec ball_point(std::mt19937_64& rng, Eigen::Index m, double r) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec d(m);
  do {
    for (Eigen::Index i = 0; i < m; ++i) d[i] = normal(rng);
  } while (d.norm() == 0.0);
  const double radius = r * std::pow(unit(rng), 1.0 / static_cast<double>(m));
  return d.normalized() * radius;
}

// Reflects coordinates that fall below a finite lower bound or above a finite
// upper bound of C_as back into the set.
Vec reflect_into(const ConstraintSet& set, Vec x) {
  if (set.kind == ConstraintSet::Kind::WholeSpace || set.kind == ConstraintSet::Kind::Point) return x;
  for (Eigen::Index i = 0; i < x.size() && i < set.lower.size(); ++i) {
    if (std::isfinite(set.lower[i]) && x[i] < set.lower[i]) x[i] = 2.0 * set.lower[i] - x[i];
    if (std::isfinite(set.upper[i]) && x[i] > set.upper[i]) x[i] = 2.0 * set.upper[i] - x[i];
  }
  return x;
}

double distance_to_cone(const Vec& p, const ConeDescriptor& cone) { return (p - cone.project(p)).norm(); }

}  // namespace

LimitSchedule LimitSchedule::geometric(double theta_first, double theta_last, int levels, double kappa0, double q,
                                       int samples_per_level, double lambda) {
  if (levels < 2) throw Error(ErrorKind::InvalidArgument, "a schedule needs at least two levels");
  if (!(theta_first > 0.0) || !(theta_last > theta_first)) {
    throw Error(ErrorKind::InvalidArgument, "schedule needs 0 < theta_1 < theta_N");
  }
  LimitSchedule s;
  const double ratio = std::pow(theta_last / theta_first, 1.0 / (levels - 1));
  for (int n = 0; n < levels; ++n) {
    s.thetas.push_back(n == levels - 1 ? theta_last : theta_first * std::pow(ratio, n));
    s.radii.push_back(kappa0 * std::pow(q, n + 1));
  }
  s.samples_per_level = samples_per_level;
  s.lambda = lambda;
  s.validate();
  return s;
}

LimitSchedule LimitSchedule::default_schedule() {
  return geometric(2.0 * std::numbers::pi, 40.0 * std::numbers::pi, 12);
}

double LimitSchedule::upper(std::size_t n) const {
  if (n + 1 < thetas.size()) return thetas[n + 1];
  const std::size_t N = thetas.size();
  return thetas[N - 1] * (thetas[N - 1] / thetas[N - 2]);
}

double LimitSchedule::max_theta() const {
  return sampling == HorizonSampling::WithinLevel ? upper(thetas.size() - 1) : thetas.back();
}

double LimitSchedule::lambda_at(std::size_t n) const { return lambda == 1.0 ? 1.0 : radii[n]; }

void LimitSchedule::validate() const {
  if (thetas.size() < 2) throw Error(ErrorKind::InvalidArgument, "schedule needs at least two horizons");
  if (radii.size() != thetas.size()) throw Error(ErrorKind::InvalidArgument, "schedule needs one radius per horizon");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!std::isfinite(thetas[i]) || !(thetas[i] > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "schedule horizons must be positive and finite");
    }
    if (i > 0 && !(thetas[i] > thetas[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "schedule horizons must be strictly increasing");
    }
    if (!(radii[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "schedule radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "schedule radii must be strictly decreasing");
    }
  }
  if (thetas.back() < 10.0 * thetas.front()) {
    throw Error(ErrorKind::InvalidArgument, "schedule needs theta_N >= 10 theta_1");
  }
  if (samples_per_level < 1) throw Error(ErrorKind::InvalidArgument, "samples_per_level must be >= 1");
  if (lambda != 0.0 && lambda != 1.0) throw Error(ErrorKind::InvalidArgument, "lambda must be 0 or 1");
}

int SampleLevel::accepted() const {
  return static_cast<int>(std::count_if(samples.begin(), samples.end(), [](const GradientSample& s) { return s.accepted; }));
}

PointCloud GradientSampleSet::pooled(std::size_t depth) const {
  PointCloud cloud(dim);
  const std::size_t first = levels.size() > depth ? levels.size() - depth : 0;
  for (std::size_t n = first; n < levels.size(); ++n) {
    for (const GradientSample& s : levels[n].samples) {
      if (s.accepted) cloud.add(s.gradient.transpose());
    }
  }
  return cloud;
}

GradientSample evaluate_sample(const ControlSystem& system, const Process& reference, const Vec& x, double theta,
                               double kappa, double lambda_n, const IntegratorOptions& integrator) {
  IntegratorOptions options = integrator;
  options.control_dense_error = false;
  if (!(theta > reference.t0()) || theta > reference.t_end()) {
    throw Error(ErrorKind::OutOfRange, fmt::format("sample horizon {:.17g} outside the reference span", theta));
  }
  GradientSample s;
  s.x = x;
  s.theta = theta;
  s.lambda_n = lambda_n;
  s.distance = (x - reference.initial_state()).norm();
  s.admissible = system.c_as.contains(x);
  if (!(s.distance < kappa) || !s.admissible) {
    s.cost_gap = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const Process p = integrate_process(system, x, reference.t0(), reference.control(), theta, options);
  s.cost_gap = std::abs(p.cost_at(theta) - reference.cost_at(theta));
  if (!(s.cost_gap < kappa)) return s;
  s.gradient = lambda_n * cost_gradient(system, p, theta, options);
  s.accepted = true;
  return s;
}

GradientSampleSet wakk_samples(const ControlSystem& system, const Process& reference, const LimitSchedule& schedule,
                               std::uint64_t seed, const IntegratorOptions& options) {
  schedule.validate();
  if (schedule.max_theta() > reference.t_end()) {
    throw Error(ErrorKind::OutOfRange,
                fmt::format("reference process ends at {:.17g} before the deepest horizon {:.17g}", reference.t_end(),
                            schedule.max_theta()));
  }
  GradientSampleSet set;
  set.dim = system.state_dim;
  set.reference_x0 = reference.initial_state();
  set.seed = seed;
  set.schedule = schedule;
  for (std::size_t n = 0; n < schedule.levels(); ++n) {
    SampleLevel level;
    level.n = static_cast<int>(n + 1);
    level.theta_lo = schedule.thetas[n];
    level.theta_hi = schedule.sampling == HorizonSampling::WithinLevel ? schedule.upper(n) : schedule.thetas[n];
    level.kappa = schedule.radii[n];
    level.lambda_n = schedule.lambda_at(n);
    for (int i = 0; i < schedule.samples_per_level; ++i) {
      auto rng = sample_rng(seed, n + 1, static_cast<std::uint64_t>(i));
      const Vec x = reflect_into(system.c_as, set.reference_x0 + ball_point(rng, set.dim, level.kappa));
      double theta = level.theta_lo;
      if (schedule.sampling == HorizonSampling::WithinLevel) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        theta = level.theta_lo + unit(rng) * (level.theta_hi - level.theta_lo);
      }
      GradientSample s = evaluate_sample(system, reference, x, theta, level.kappa, level.lambda_n, options);
      s.level = level.n;
      s.index = i;
      level.samples.push_back(std::move(s));
    }
    if (level.accepted() == 0) set.empty_levels.push_back(level.n);
    set.levels.push_back(std::move(level));
  }
  return set;
}

WakkResult wakk_check(const Row& psi0, double lambda, const GradientSampleSet& samples, const ConeDescriptor& cone,
                      double tol) {
  if (lambda != samples.schedule.lambda) {
    throw Error(ErrorKind::InvalidArgument, "samples were drawn for a different lambda");
  }
  if (psi0.size() != samples.dim) throw Error(ErrorKind::DimensionMismatch, "psi0 has the wrong dimension");
  WakkResult r;
  r.cloud = samples.pooled(2);
  if (r.cloud.empty()) throw Error(ErrorKind::EmptyLevel, "no accepted samples in the two deepest levels");
  r.target = -psi0.transpose();
  r.membership = cone_plus_hull_membership(r.target, cone, r.cloud, tol);
  r.member = r.membership.member;
  r.gap = r.membership.gap;
  if (samples.dim == 2) r.hull = convex_hull_2d(r.cloud);
  return r;
}

std::vector<std::vector<double>> phase_shifted_sequences(const std::vector<double>& phases, int count, double period) {
  std::vector<std::vector<double>> out;
  for (double phi : phases) {
    std::vector<double> seq;
    for (int n = 1; n <= count; ++n) seq.push_back(phi + period * n);
    out.push_back(std::move(seq));
  }
  return out;
}

std::size_t tail_start(std::size_t n) { return n - (n + 1) / 2; }

AkkResult akk_check(const Row& psi0, double lambda, const ControlSystem& system, const Process& process,
                    const std::vector<std::vector<double>>& sequences, const std::vector<double>& radii,
                    const ConeDescriptor& cone, double tol, const AkkOptions& options) {
  if (sequences.size() < 3) throw Error(ErrorKind::InvalidArgument, "akk_check needs at least three sequences");
  if (lambda != 0.0 && lambda != 1.0) throw Error(ErrorKind::InvalidArgument, "lambda must be 0 or 1");
  if (psi0.size() != system.state_dim) throw Error(ErrorKind::DimensionMismatch, "psi0 has the wrong dimension");
  const Vec target = -psi0.transpose();
  const Vec x0 = process.initial_state();
  AkkResult result;
  result.member = true;
  for (std::size_t q = 0; q < sequences.size(); ++q) {
    const auto& seq = sequences[q];
    if (seq.size() > radii.size()) throw Error(ErrorKind::InvalidArgument, "need one radius per sequence horizon");
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (!(seq[i] > seq[i - 1])) throw Error(ErrorKind::InvalidArgument, "sequences must be strictly increasing");
    }
    AkkSequenceResult sr;
    sr.distance = std::numeric_limits<double>::infinity();
    for (std::size_t n = tail_start(seq.size()); n < seq.size(); ++n) {
      sr.thetas.push_back(seq[n]);
      const double kappa = radii[n];
      const double lambda_n = lambda == 1.0 ? 1.0 : kappa;
      for (int i = 0; i < options.samples_per_level; ++i) {
        auto rng = sample_rng(options.seed + 0x9e3779b97f4a7c15ULL * (q + 1), n + 1, static_cast<std::uint64_t>(i));
        const Vec x = reflect_into(system.c_as, x0 + ball_point(rng, system.state_dim, kappa));
        const GradientSample s = evaluate_sample(system, process, x, seq[n], kappa, lambda_n, options.integrator);
        if (!s.accepted) continue;
        ++sr.accepted;
        const Vec g = s.gradient.transpose();
        const double d = distance_to_cone(target - g, cone);
        if (d < sr.distance) {
          sr.distance = d;
          sr.nearest = g;
        }
      }
    }
    sr.member = sr.accepted > 0 && sr.distance <= tol;
    result.member = result.member && sr.member;
    result.sequences.push_back(std::move(sr));
  }
  return result;
}

std::string to_string(AkStatus status) {
  switch (status) {
    case AkStatus::Converged: return "Converged";
    case AkStatus::Oscillating: return "Oscillating";
    case AkStatus::Diverging: return "Diverging";
    case AkStatus::Undetermined: return "Undetermined";
  }
  return "?";
}

AkResult ak_limit(const ControlSystem& system, const Process& process, const std::vector<double>& thetas,
                  std::size_t window, double tol, double cap, const IntegratorOptions& options) {
  if (thetas.empty()) throw Error(ErrorKind::EmptyGrid, "ak_limit needs at least one horizon");
  if (window < 2 || window > thetas.size()) {
    throw Error(ErrorKind::InvalidArgument, "window must lie in [2, number of horizons]");
  }
  for (std::size_t i = 1; i < thetas.size(); ++i) {
    if (!(thetas[i] > thetas[i - 1])) throw Error(ErrorKind::InvalidArgument, "horizons must be strictly increasing");
  }
  const SensitivityPath sens = transition_matrix(system, process, thetas.back(), options);
  AkResult r;
  r.thetas = thetas;
  r.singular_warning = sens.singular_warning();
  for (double th : thetas) {
    const Row g = sens.g(th);
    if (!g.allFinite()) throw Error(ErrorKind::NonFinite, fmt::format("partial integral non-finite at {:.17g}", th));
    r.partials.push_back(g);
  }
  const std::size_t first = thetas.size() - window;
  r.tail.assign(r.partials.begin() + static_cast<std::ptrdiff_t>(first), r.partials.end());
  for (std::size_t i = 0; i < r.tail.size(); ++i) {
    for (std::size_t j = i + 1; j < r.tail.size(); ++j) {
      r.tail_diameter = std::max(r.tail_diameter, (r.tail[i] - r.tail[j]).norm());
    }
  }
  r.v = r.partials.back();
  bool growing = true;
  for (std::size_t i = 1; i < r.tail.size(); ++i) growing = growing && r.tail[i].norm() > r.tail[i - 1].norm();
  if (r.tail_diameter < tol) {
    r.status = AkStatus::Converged;
  } else if (growing && r.tail.back().norm() > cap) {
    r.status = AkStatus::Diverging;
  } else if (r.tail_diameter > 10.0 * tol) {
    r.status = AkStatus::Oscillating;
  } else {
    r.status = AkStatus::Undetermined;
  }
  return r;
}

CostateArc ak_arc(const ControlSystem& system, const Process& process, const Row& v, const IntegratorOptions& options) {
  return integrate_adjoint(system, process, -v, 1.0, options);
}

double psiA_residual(const CostateArc& arc, const SensitivityPath& sens, double theta) {
  if (!arc.path().covers(theta) || !sens.path().covers(theta)) {
    throw Error(ErrorKind::GridMismatch, fmt::format("theta = {:.17g} outside the arc or sensitivity path", theta));
  }
  return (arc.psi(theta) * sens.A(theta)).norm();
}

MaxHResult maxh_residual(const ControlSystem& system, const Process& process, const CostateArc& arc,
                         const std::vector<double>& t_probe, const std::vector<Vec>& u_grid) {
  if (u_grid.empty()) throw Error(ErrorKind::EmptyGrid, "control grid is empty");
  if (t_probe.empty()) throw Error(ErrorKind::EmptyGrid, "probe grid is empty");
  for (const Vec& u : u_grid) {
    if (u.size() != system.control_dim || !system.control_set.contains(u)) {
      throw Error(ErrorKind::InvalidArgument, "control grid point outside U");
    }
  }
  MaxHResult r;
  r.residuals.reserve(t_probe.size());
  bool psi_zero = true;
  r.max_residual = -1.0;
  for (double t : t_probe) {
    const Vec y = process.state_at(t);
    const Row psi = arc.psi(t);
    psi_zero = psi_zero && psi.norm() == 0.0;
    const Vec uref = process.control()(t);
    const double href = hamiltonian(system, y, psi, uref, arc.lambda(), t);
    double best = href;
    int idx = -1;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
      const double h = hamiltonian(system, y, psi, u_grid[i], arc.lambda(), t);
      if (h > best) {
        best = h;
        idx = static_cast<int>(i);
      }
    }
    const double res = best - href;
    r.residuals.push_back(res);
    if (res > r.max_residual) {
      r.max_residual = res;
      r.argmax_time = t;
      r.violating_index = idx;
      r.violating_u = idx < 0 ? uref : u_grid[static_cast<std::size_t>(idx)];
    }
  }
  r.degenerate = arc.lambda() == 0.0 && psi_zero;
  return r;
}

std::vector<Vec> box_grid(const Vec& lower, const Vec& upper, int per_axis) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "grid bounds differ in size");
  }
  if (per_axis < 1) throw Error(ErrorKind::EmptyGrid, "grid needs at least one point per axis");
  const Eigen::Index k = lower.size();
  std::vector<Vec> out;
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  for (;;) {
    Vec u(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const int i = idx[static_cast<std::size_t>(j)];
      u[j] = per_axis == 1 ? 0.5 * (lower[j] + upper[j])
                           : lower[j] + (upper[j] - lower[j]) * static_cast<double>(i) / (per_axis - 1);
    }
    out.push_back(std::move(u));
    Eigen::Index j = 0;
    while (j < k && ++idx[static_cast<std::size_t>(j)] == per_axis) {
      idx[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == k) break;
  }
  return out;
}

AntonResult anton_residual(const ControlSystem& system, const Process& process, const std::vector<double>& theta_tail,
                           const std::vector<Vec>& u_grid, const std::vector<double>& t_probe,
                           const IntegratorOptions& options) {
  if (u_grid.empty() || t_probe.empty() || theta_tail.empty()) {
    throw Error(ErrorKind::EmptyGrid, "anton_residual needs controls, probes and horizons");
  }
  AntonResult r;
  r.value = std::numeric_limits<double>::infinity();
  const double theta_max = *std::max_element(theta_tail.begin(), theta_tail.end());
  for (double t : t_probe) {
    if (t > theta_max) continue;
    const SensitivityPath sens = transition_matrix(system, process, theta_max, options, t);
    const Vec y = process.state_at(t);
    const Vec uref = process.control()(t);
    for (double th : theta_tail) {
      if (th < t) continue;
      const Row q = -sens.g(th);
      const double href = hamiltonian(system, y, q, uref, 1.0, t);
      for (const Vec& u : u_grid) {
        const double d = href - hamiltonian(system, y, q, u, 1.0, t);
        if (d < r.value) {
          r.value = d;
          r.argmin_time = t;
          r.argmin_theta = th;
          r.argmin_u = u;
        }
      }
    }
  }
  if (!std::isfinite(r.value)) throw Error(ErrorKind::EmptyGrid, "no horizon lies beyond the probe times");
  return r;
}

ZeroCheckResult transversality_zero_check(const Row& psi0, double lambda, const ControlSystem& system, const Vec& x0,
                                          double tol) {
  if (psi0.size() != system.state_dim || x0.size() != system.state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "psi0 and x0 must have the state dimension");
  }
  ZeroCheckResult r;
  r.cone = normal_cone(system.c0, x0);
  const Vec v = (psi0 - lambda * system.eval_grad_l(x0)).transpose();
  r.residual = distance_to_cone(v, r.cone);
  r.holds = r.residual <= tol;
  return r;
}

OvertakingResult overtaking_compare(const ControlSystem& system, const Process& a, const Process& b,
                                    const std::vector<double>& theta_grid) {
  if (theta_grid.empty()) throw Error(ErrorKind::EmptyGrid, "theta grid is empty");
  if (a.t0() != b.t0()) throw Error(ErrorKind::GridMismatch, "processes start at different times");
  const double th_max = *std::max_element(theta_grid.begin(), theta_grid.end());
  if (a.t_end() < th_max || b.t_end() < th_max) {
    throw Error(ErrorKind::GridMismatch, "a process ends before the last horizon");
  }
  OvertakingResult r;
  const double dl = system.eval_l(b.initial_state()) - system.eval_l(a.initial_state());
  r.tail_liminf = std::numeric_limits<double>::infinity();
  r.tail_limsup = -std::numeric_limits<double>::infinity();
  for (std::size_t i = tail_start(theta_grid.size()); i < theta_grid.size(); ++i) {
    const double th = theta_grid[i];
    const double d = dl + b.cost_at(th) - a.cost_at(th);
    r.thetas.push_back(th);
    r.differences.push_back(d);
    r.tail_liminf = std::min(r.tail_liminf, d);
    r.tail_limsup = std::max(r.tail_limsup, d);
  }
  return r;
}

nlohmann::json to_json(const LimitSchedule& schedule) {
  nlohmann::json j;
  j["thetas"] = schedule.thetas;
  j["radii"] = schedule.radii;
  j["samples_per_level"] = schedule.samples_per_level;
  j["lambda"] = schedule.lambda;
  j["horizon_sampling"] = schedule.sampling == HorizonSampling::WithinLevel ? "within-level" : "at-level";
  return j;
}

nlohmann::json to_json(const GradientSampleSet& samples) {
  nlohmann::json j;
  j["dim"] = samples.dim;
  j["reference_x0"] = to_vector(samples.reference_x0);
  j["seed"] = samples.seed;
  j["empty_levels"] = samples.empty_levels;
  auto& levels = j["levels"] = nlohmann::json::array();
  for (const SampleLevel& l : samples.levels) {
    nlohmann::json lj;
    lj["n"] = l.n;
    lj["theta_lo"] = l.theta_lo;
    lj["theta_hi"] = l.theta_hi;
    lj["kappa"] = l.kappa;
    lj["lambda_n"] = l.lambda_n;
    lj["accepted"] = l.accepted();
    lj["drawn"] = l.samples.size();
    levels.push_back(std::move(lj));
  }
  return j;
}

nlohmann::json to_json(const WakkResult& result) {
  nlohmann::json j;
  j["member"] = result.member;
  j["gap"] = result.gap;
  j["target"] = to_vector(result.target);
  j["certificate"] = to_json(result.membership);
  j["pooled_samples"] = result.cloud.size();
  if (result.hull) j["hull"] = to_json(*result.hull);
  return j;
}

nlohmann::json to_json(const AkkResult& result) {
  nlohmann::json j;
  j["member"] = result.member;
  auto& seqs = j["sequences"] = nlohmann::json::array();
  for (const auto& s : result.sequences) {
    nlohmann::json sj;
    sj["thetas"] = s.thetas;
    sj["member"] = s.member;
    sj["distance"] = s.distance;
    sj["accepted"] = s.accepted;
    sj["nearest"] = to_vector(s.nearest);
    seqs.push_back(std::move(sj));
  }
  return j;
}

nlohmann::json to_json(const AkResult& result) {
  nlohmann::json j;
  j["status"] = to_string(result.status);
  j["v"] = to_vector(result.v);
  j["tail_diameter"] = result.tail_diameter;
  j["singular_warning"] = result.singular_warning;
  auto& parts = j["partials"] = nlohmann::json::array();
  for (std::size_t i = 0; i < result.thetas.size(); ++i) {
    parts.push_back({{"theta", result.thetas[i]}, {"g", to_vector(result.partials[i])}});
  }
  return j;
}

nlohmann::json to_json(const MaxHResult& result) {
  nlohmann::json j;
  j["max_residual"] = result.max_residual;
  j["argmax_time"] = result.argmax_time;
  j["violating_u"] = to_vector(result.violating_u);
  j["violating_index"] = result.violating_index;
  j["tie_break"] = "lowest grid index";
  j["degenerate"] = result.degenerate;
  return j;
}

}  // namespace ihoc
