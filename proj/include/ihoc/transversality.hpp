#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ihoc/convex_geom.hpp"
#include "ihoc/ode_core.hpp"
#include "ihoc/variational.hpp"

namespace ihoc {

/// How a sample at level n picks its horizon: exactly theta_n, or uniformly
/// in [theta_n, theta_{n+1}) (the last level uses the schedule's growth ratio).
enum class HorizonSampling { AtLevel, WithinLevel };

struct LimitSchedule {
  std::vector<double> thetas;
  std::vector<double> radii;
  int samples_per_level = 64;
  double lambda = 1.0;
  HorizonSampling sampling = HorizonSampling::WithinLevel;

  /// theta_n geometric from theta_1 to theta_N, kappa_n = kappa0 * q^n (n >= 1).
  static LimitSchedule geometric(double theta_first, double theta_last, int levels, double kappa0 = 0.5,
                                 double q = 0.6, int samples_per_level = 64, double lambda = 1.0);
  /// 12 levels from 2 pi to 40 pi, kappa_n = 0.5 * 0.6^n, 64 samples per level.
  static LimitSchedule default_schedule();

  std::size_t levels() const { return thetas.size(); }
  /// Upper end of the horizon window of level n (0-based).
  double upper(std::size_t n) const;
  /// Largest horizon any sample may use.
  double max_theta() const;
  /// lambda_n: 1 when lambda = 1, kappa_n when lambda = 0.
  double lambda_at(std::size_t n) const;

  /// Throws InvalidArgument on non-increasing thetas, theta_N < 10 theta_1,
  /// non-decreasing or non-positive radii, or lambda outside {0, 1}.
  void validate() const;
};

struct GradientSample {
  int level = 0;
  int index = 0;
  Vec x;
  double theta = 0.0;
  double distance = 0.0;  // |x - y(0)|
  double cost_gap = 0.0;  // |J(x; theta) - J(y(0); theta)|
  bool admissible = true;  // x in C_as
  bool accepted = false;
  double lambda_n = 1.0;
  Row gradient;  // lambda_n * dJ/dx(x; theta), empty when rejected
};

struct SampleLevel {
  int n = 0;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  double kappa = 0.0;
  double lambda_n = 1.0;
  std::vector<GradientSample> samples;
  int accepted() const;
};

struct GradientSampleSet {
  Eigen::Index dim = 0;
  Vec reference_x0;
  std::uint64_t seed = 0;
  LimitSchedule schedule;
  std::vector<SampleLevel> levels;
  std::vector<int> empty_levels;  // levels where no sample passed the filters

  /// Accepted gradients of the deepest `depth` levels.
  PointCloud pooled(std::size_t depth = 2) const;
};

/// Integrates from x with the reference control up to theta, applies the
/// filters |x - y(0)| < kappa, |J(x) - J(y(0))| < kappa, x in C_as and stores
/// lambda_n * dJ/dx on acceptance. Only endpoint values are used, so the
/// integrations skip interpolation error control.
GradientSample evaluate_sample(const ControlSystem& system, const Process& reference, const Vec& x,
                               double theta, double kappa, double lambda_n,
                               const IntegratorOptions& options = {});

/// Samples every level of the schedule. Each (level, index) draws from its
/// own generator seeded by (seed, level, index), so the set does not depend
/// on evaluation order.
GradientSampleSet wakk_samples(const ControlSystem& system, const Process& reference,
                               const LimitSchedule& schedule, std::uint64_t seed,
                               const IntegratorOptions& options = {});

struct WakkResult {
  bool member = false;
  double gap = 0.0;
  Vec target;  // -psi0
  MembershipResult membership;
  PointCloud cloud{1};
  std::optional<HullApprox> hull;  // dim = 2 only
};

/// -psi0 in cone + co(pooled samples of the two deepest levels) within tol.
/// Throws EmptyLevel when the pool is empty, InvalidArgument on lambda mismatch.
WakkResult wakk_check(const Row& psi0, double lambda, const GradientSampleSet& samples,
                      const ConeDescriptor& cone, double tol);

struct AkkSequenceResult {
  std::vector<double> thetas;  // tail actually sampled
  bool member = false;
  double distance = 0.0;  // min over samples of dist(-psi0 - s, cone)
  Vec nearest;            // the sample realizing it
  int accepted = 0;
};

struct AkkResult {
  bool member = false;
  std::vector<AkkSequenceResult> sequences;
};

struct AkkOptions {
  int samples_per_level = 8;
  std::uint64_t seed = 0;
  IntegratorOptions integrator{};
};

/// Per-sequence membership in cone + (sample set, no hull) using the tail
/// (last ceil(N/2) horizons) of every sequence; radii[i] is the radius used at
/// the i-th horizon of each sequence. Needs at least 3 sequences.
AkkResult akk_check(const Row& psi0, double lambda, const ControlSystem& system, const Process& process,
                    const std::vector<std::vector<double>>& sequences, const std::vector<double>& radii,
                    const ConeDescriptor& cone, double tol, const AkkOptions& options = {});

/// theta_n = phase + 2 pi n for the given phases, n = 1..count.
std::vector<std::vector<double>> phase_shifted_sequences(const std::vector<double>& phases, int count,
                                                         double period = 2.0 * 3.14159265358979323846);

enum class AkStatus { Converged, Oscillating, Diverging, Undetermined };
std::string to_string(AkStatus status);

struct AkResult {
  AkStatus status = AkStatus::Undetermined;
  Row v;                    // limit candidate (last partial) for Converged
  double tail_diameter = 0.0;
  std::vector<double> thetas;
  std::vector<Row> partials;  // g(theta_n)
  std::vector<Row> tail;
  bool singular_warning = false;
};

/// Partial integrals g(theta) on the schedule, classified by the diameter of
/// the last `window` of them.
AkResult ak_limit(const ControlSystem& system, const Process& process, const std::vector<double>& thetas,
                  std::size_t window, double tol, double cap = 1e8, const IntegratorOptions& options = {});

/// Co-state arc with psi(0) = -v and lambda = 1.
CostateArc ak_arc(const ControlSystem& system, const Process& process, const Row& v,
                  const IntegratorOptions& options = {});

/// |psi(theta) A(theta)|. Throws GridMismatch.
double psiA_residual(const CostateArc& arc, const SensitivityPath& sens, double theta);

struct MaxHResult {
  double max_residual = 0.0;
  double argmax_time = 0.0;
  Vec violating_u;             // grid point realizing the residual (the reference control when 0)
  int violating_index = -1;    // -1: the reference control itself
  std::vector<double> residuals;  // per probe time
  bool degenerate = false;     // lambda = 0 with psi = 0 along the probes
};

/// max_t [max_{u in grid} H(y, psi, u) - H(y, psi, u_ref)]; the reference
/// control is part of the candidate set, ties go to the lowest grid index.
/// Throws EmptyGrid, InvalidArgument when a grid point is outside U.
MaxHResult maxh_residual(const ControlSystem& system, const Process& process, const CostateArc& arc,
                         const std::vector<double>& t_probe, const std::vector<Vec>& u_grid);

/// Tensor grid with `per_axis` points on each axis of [lower, upper].
std::vector<Vec> box_grid(const Vec& lower, const Vec& upper, int per_axis);

struct AntonResult {
  double value = 0.0;
  double argmin_time = 0.0;
  double argmin_theta = 0.0;
  Vec argmin_u;
};

/// min over probes t and grid controls u of min over the theta tail of
/// H(y(t), q, u_ref(t)) - H(y(t), q, u), q = -dJ/dx(y(t), t, u_ref; theta).
/// Throws EmptyGrid.
AntonResult anton_residual(const ControlSystem& system, const Process& process,
                           const std::vector<double>& theta_tail, const std::vector<Vec>& u_grid,
                           const std::vector<double>& t_probe, const IntegratorOptions& options = {});

struct ZeroCheckResult {
  bool holds = false;
  double residual = 0.0;  // distance of psi0 - lambda grad l to the normal cone
  ConeDescriptor cone;
};

/// psi0 - lambda grad l(x0) in N(x0; C0) within tol. Throws PointNotInSet.
ZeroCheckResult transversality_zero_check(const Row& psi0, double lambda, const ControlSystem& system,
                                          const Vec& x0, double tol);

struct OvertakingResult {
  double tail_liminf = 0.0;
  double tail_limsup = 0.0;
  std::vector<double> thetas;
  std::vector<double> differences;
};

/// l(y_b(0)) - l(y_a(0)) + J_b(theta) - J_a(theta) over the last ceil(N/2)
/// horizons. Throws GridMismatch.
OvertakingResult overtaking_compare(const ControlSystem& system, const Process& a, const Process& b,
                                    const std::vector<double>& theta_grid);

/// Indices of the liminf/limsup tail of a length-n sequence.
std::size_t tail_start(std::size_t n);

nlohmann::json to_json(const LimitSchedule& schedule);
nlohmann::json to_json(const GradientSampleSet& samples);
nlohmann::json to_json(const WakkResult& result);
nlohmann::json to_json(const AkkResult& result);
nlohmann::json to_json(const AkResult& result);
nlohmann::json to_json(const MaxHResult& result);

}  // namespace ihoc
