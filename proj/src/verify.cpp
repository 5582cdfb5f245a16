#include "ihoc/verify.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ihoc/error.hpp"
#include "ihoc/models.hpp"
#include "ihoc/transversality.hpp"

namespace ihoc {

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i == n - 1 ? b : a + (b - a) * i / (n - 1);
  return out;
}

std::vector<Vec> scalar_grid(double a, double b, int n) {
  std::vector<Vec> out;
  for (double v : linspace(a, b, n)) out.push_back(Vec::Constant(1, v));
  return out;
}

void add(SuiteResult& r, std::string name, bool pass, std::string detail) {
  r.checks.push_back({std::move(name), pass, std::move(detail)});
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

SuiteResult planar_suite() {
  SuiteResult r;
  r.suite = "planar";
  const SDrivenModel model = planar_model();
  const ControlSystem sys = sdriven_system(model);
  const Vec C = vec2(0.6, -0.3);
  const ControlSignal u = ControlSignal::analytic(2, [C](double t) -> Vec { return 2.0 * std::exp(-t) * C; });
  const Process numeric = integrate_process(sys, model.x_star, 0.0, u, 12.0);

  double cost_err = 0.0;
  for (double theta : {1.0, 5.0, 12.0}) {
    const Vec y = numeric.state_at(theta);
    const double closed = sdriven_S(model, theta, y) - sdriven_S(model, 0.0, model.x_star) -
                          std::expm1(-2.0 * theta) * C.squaredNorm() / 2.0;
    cost_err = std::max(cost_err, std::abs(eval_cost(numeric, theta) - closed));
  }
  add(r, "cost identity", cost_err < 1e-6, fmt::format("max error {:.3e}", cost_err));

  const Row psi0 = sdriven_Sx(model, 0.0, model.x_star) + C.transpose();
  const CostateArc arc = integrate_adjoint(sys, numeric, psi0, 1.0);
  double adj_err = 0.0;
  for (double t : linspace(0.0, 12.0, 241)) {
    const Row exact = sdriven_Sx(model, t, numeric.state_at(t)) + C.transpose();
    adj_err = std::max(adj_err, (arc.psi(t) - exact).lpNorm<Eigen::Infinity>());
  }
  add(r, "adjoint closure", adj_err < 1e-6, fmt::format("sup error {:.3e}", adj_err));

  const LimitSchedule schedule = LimitSchedule::default_schedule();
  const AnalyticArc ref = sdriven_candidate(model, Vec::Zero(2), schedule.max_theta() + 1.0);
  const AkResult ak = ak_limit(sys, ref.process, schedule.thetas, 4, 1e-6);
  add(r, "ak oscillating", ak.status == AkStatus::Oscillating, to_string(ak.status));

  const GradientSampleSet samples = wakk_samples(sys, ref.process, schedule, 1);
  const ConeDescriptor cone = normal_cone(sys.c_as, model.x_star);
  const Row base = sdriven_Sx(model, 0.0, model.x_star);
  const WakkResult inside = wakk_check(base + vec2(0.3, 0.4).transpose(), 1.0, samples, cone, 5e-2);
  const WakkResult outside = wakk_check(base + vec2(0.72, -0.96).transpose(), 1.0, samples, cone, 5e-2);
  add(r, "wakk member |C|=0.5", inside.member, fmt::format("gap {:.3e}", inside.gap));
  add(r, "wakk non-member |C|=1.2", !outside.member && std::abs(outside.gap - 0.2) < 2e-2,
      fmt::format("gap {:.3e}", outside.gap));

  const AnalyticArc cand = sdriven_candidate(model, C, 12.0);
  std::vector<Vec> grid = box_grid(vec2(-2.0, -2.0), vec2(2.0, 2.0), 41);
  const MaxHResult mh = maxh_residual(sys, cand.process, cand.arc, linspace(0.0, 12.0, 25), grid);
  add(r, "maxH along candidate", mh.max_residual < 1e-6, fmt::format("residual {:.3e}", mh.max_residual));

  r.data = {{"cost_error", cost_err},          {"adjoint_error", adj_err},
            {"ak_status", to_string(ak.status)}, {"wakk_gap_inside", inside.gap},
            {"wakk_gap_outside", outside.gap},   {"maxh_residual", mh.max_residual}};
  return r;
}

SuiteResult oscillator_suite() {
  SuiteResult r;
  r.suite = "oscillator";
  const SDrivenModel model = oscillator_model();
  const ControlSystem sys = sdriven_system(model);
  const AnalyticArc ref = sdriven_candidate(model, Vec::Zero(1), 45.0);
  const std::vector<double> thetas = linspace(5.0, 40.0, 12);
  const AkResult ak = ak_limit(sys, ref.process, thetas, 4, 1e-6);
  const double vnorm = ak.v.size() ? ak.v.norm() : INFINITY;
  add(r, "ak converged to 0", ak.status == AkStatus::Converged && vnorm < 1e-6,
      fmt::format("{} |v| = {:.3e}", to_string(ak.status), vnorm));

  const std::vector<Vec> grid = scalar_grid(-4.0, 4.0, 801);
  const Row v = ak.v.size() ? ak.v : Row::Zero(1);
  const CostateArc induced = ak_arc(sys, ref.process, v);
  const MaxHResult at0 = maxh_residual(sys, ref.process, induced, {0.0}, grid);
  add(r, "maxH of induced arc at t=0 is 1", std::abs(at0.max_residual - 1.0) < 1e-3,
      fmt::format("residual {:.6f}", at0.max_residual));

  const MaxHResult truth = maxh_residual(sys, ref.process, ref.arc, linspace(0.0, 5.0, 51), grid);
  add(r, "maxH of true arc", truth.max_residual < 1e-6, fmt::format("residual {:.3e}", truth.max_residual));

  const SensitivityPath sens = transition_matrix(sys, ref.process, 40.0);
  double psiA_min = INFINITY;
  for (double th : thetas) psiA_min = std::min(psiA_min, psiA_residual(ref.arc, sens, th));
  add(r, "psiA of true arc stays 1", std::abs(psiA_min - 1.0) < 1e-6, fmt::format("min {:.6f}", psiA_min));

  r.data = {{"ak_status", to_string(ak.status)},
            {"ak_norm", vnorm},
            {"maxh_induced_t0", at0.max_residual},
            {"maxh_true", truth.max_residual},
            {"psiA_min", psiA_min}};
  return r;
}

SuiteResult ramsey_suite() {
  SuiteResult r;
  r.suite = "ramsey";
  const RamseyModel model = ramsey_preset();
  const ControlSystem sys = ramsey_system(model);
  const RamseyStationary st = ramsey_stationary(model);
  add(r, "stationary point", std::abs(st.x0 - 4.0) < 1e-10 && std::abs(st.u0 - 2.0) < 1e-10,
      fmt::format("x0 = {:.12f}, u0 = {:.12f}", st.x0, st.u0));
  const RamseyLinearization lin = ramsey_linearize(model, st);
  add(r, "saddle eigenvalues", lin.lambda_unstable > 0.0 && lin.lambda_stable < 0.0,
      fmt::format("{:.6f}, {:.6f}", lin.lambda_unstable, lin.lambda_stable));

  const double horizon = 150.0;
  const SaddlePath path = ramsey_saddle_path(model, horizon);
  const Vec end = path.process.state_at(100.0);
  const double dist100 = std::hypot(end[0] - st.x0, path.process.control()(100.0)[0] - st.u0);
  add(r, "saddle path reaches (x0, u0)", dist100 < 1e-3, fmt::format("distance at T=100 {:.3e}", dist100));

  const std::vector<double> thetas = linspace(10.0, 100.0, 10);
  const AkResult ak = ak_limit(sys, path.process, thetas, 4, 1e-9);
  add(r, "ak converged to 0", ak.status == AkStatus::Converged && ak.v.norm() < 1e-12, to_string(ak.status));

  const MaxHResult mh = maxh_residual(sys, path.process, path.arc, linspace(0.0, 60.0, 61), scalar_grid(0.05, 6.0, 600));
  add(r, "maxH along saddle path", mh.max_residual < 1e-5, fmt::format("residual {:.3e}", mh.max_residual));

  const LimitSchedule schedule = LimitSchedule::geometric(10.0, 100.0, 8, 0.5, 0.6, 16);
  const GradientSampleSet samples = wakk_samples(sys, path.process, schedule, 1);
  const ConeDescriptor cone = normal_cone(sys.c_as, Vec::Constant(1, model.x_star));
  const WakkResult w = wakk_check(path.arc.psi(0.0), 1.0, samples, cone, 1e-9);
  add(r, "wakk member with half-line cone", w.member, fmt::format("psi(0) = {:.6f}, gap {:.3e}", path.arc.psi(0.0)[0], w.gap));

  r.data = {{"x0", st.x0},
            {"u0", st.u0},
            {"lambda_unstable", lin.lambda_unstable},
            {"lambda_stable", lin.lambda_stable},
            {"t_seed", path.t_seed},
            {"distance_T100", dist100},
            {"maxh_residual", mh.max_residual},
            {"psi0", path.arc.psi(0.0)[0]}};
  return r;
}

}  // namespace

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
}

std::vector<std::string> suite_names() { return {"planar", "oscillator", "ramsey"}; }

SuiteResult run_suite(const std::string& name) {
  if (name == "planar") return planar_suite();
  if (name == "oscillator") return oscillator_suite();
  if (name == "ramsey") return ramsey_suite();
  throw Error(ErrorKind::ConfigError, fmt::format("unknown suite '{}' (expected planar, oscillator or ramsey)", name));
}

}  // namespace ihoc
