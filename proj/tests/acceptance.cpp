// Acceptance report: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ihoc/cli.hpp"
#include "ihoc/error.hpp"
#include "ihoc/model_file.hpp"
#include "ihoc/models.hpp"
#include "ihoc/transversality.hpp"
#include "support.hpp"

using namespace ihoc;
using ihoc::testing::linspace;
using ihoc::testing::scalar_grid;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vec random_in_ball(std::mt19937_64& rng, double r_lo, double r_hi) {
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi), radius(r_lo, r_hi);
  const double a = angle(rng), r = radius(rng);
  Vec v(2);
  v << r * std::cos(a), r * std::sin(a);
  return v;
}

ControlSignal planar_control(const Vec& C) {
  return ControlSignal::analytic(2, [C](double t) -> Vec { return 2.0 * std::exp(-t) * C; });
}

// 1 ---------------------------------------------------------------------------
Outcome cost_identity() {
  const SDrivenModel m = planar_model();
  const ControlSystem s = sdriven_system(m);
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vec C = random_in_ball(rng, 0.0, 1.5);
    const Process p = integrate_process(s, m.x_star, 0.0, planar_control(C), 12.0);
    for (double th : {1.0, 5.0, 12.0}) {
      const double closed = sdriven_S(m, th, p.state_at(th)) - sdriven_S(m, 0.0, m.x_star) +
                            (1.0 - std::exp(-2.0 * th)) * C.squaredNorm() / 2.0;
      worst = std::max(worst, std::abs(eval_cost(p, th) - closed));
    }
  }
  return {worst < 1e-6, fmt::format("max |J - closed form| = {:.2e} over 10 C x 3 horizons", worst)};
}

// 2 ---------------------------------------------------------------------------
Outcome adjoint_closure() {
  const SDrivenModel m = planar_model();
  const ControlSystem s = sdriven_system(m);
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vec C = random_in_ball(rng, 0.0, 1.5);
    const Process p = integrate_process(s, m.x_star, 0.0, planar_control(C), 12.0);
    const CostateArc arc = integrate_adjoint(s, p, sdriven_Sx(m, 0.0, m.x_star) + C.transpose(), 1.0);
    for (double t : linspace(0.0, 12.0, 481)) {
      const Row exact = sdriven_Sx(m, t, p.state_at(t)) + C.transpose();
      worst = std::max(worst, (arc.psi(t) - exact).lpNorm<Eigen::Infinity>());
    }
  }
  return {worst < 1e-6, fmt::format("sup |psi - (S_x + C)| on [0, 12] = {:.2e} over 5 C", worst)};
}

// 3 ---------------------------------------------------------------------------
Outcome wakk_disk() {
  const auto start = std::chrono::steady_clock::now();
  const SDrivenModel m = planar_model();
  const ControlSystem s = sdriven_system(m);
  const LimitSchedule sched = LimitSchedule::default_schedule();
  // the sampled gradients (sin theta, 1 - cos theta) do not depend on C
  const AnalyticArc ref = sdriven_candidate(m, Vec::Zero(2), sched.max_theta() + 1.0);
  const GradientSampleSet set = wakk_samples(s, ref.process, sched, 20240501);
  const ConeDescriptor cone = normal_cone(s.c_as, m.x_star);
  const Row base = sdriven_Sx(m, 0.0, m.x_star);
  std::mt19937_64 rng(3);
  int accepted = 0, rejected = 0;
  double worst_in = 0.0, least_out = INFINITY;
  for (int k = 0; k < 20; ++k) {
    const WakkResult r = wakk_check(base + random_in_ball(rng, 0.0, 0.9).transpose(), 1.0, set, cone, 5e-2);
    accepted += r.member;
    worst_in = std::max(worst_in, r.gap);
  }
  for (int k = 0; k < 20; ++k) {
    const WakkResult r = wakk_check(base + random_in_ball(rng, 1.1, 2.0).transpose(), 1.0, set, cone, 5e-2);
    rejected += !r.member;
    least_out = std::min(least_out, r.gap);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {accepted == 20 && rejected == 20 && secs < 30.0,
          fmt::format("accepted {}/20 (max gap {:.3f}), rejected {}/20 (min gap {:.3f}), {:.1f} s", accepted, worst_in,
                      rejected, least_out, secs)};
}

// 4 ---------------------------------------------------------------------------
Outcome ak_inconsistency() {
  const SDrivenModel m = oscillator_model();
  const ControlSystem s = sdriven_system(m);
  const AnalyticArc ref = sdriven_candidate(m, Vec::Zero(1), 41.0);
  const AkResult ak = ak_limit(s, ref.process, linspace(5.0, 40.0, 12), 4, 1e-6);
  const double vn = ak.v.norm();
  const auto grid = scalar_grid(-4.0, 4.0, 801);
  const MaxHResult induced = maxh_residual(s, ref.process, ak_arc(s, ref.process, ak.v), {0.0}, grid);
  const MaxHResult truth = maxh_residual(s, ref.process, ref.arc, linspace(0.0, 5.0, 101), grid);
  const bool pass = ak.status == AkStatus::Converged && vn < 1e-6 && std::abs(induced.max_residual - 1.0) < 1e-3 &&
                    truth.max_residual < 1e-6;
  return {pass, fmt::format("ak {} |v| = {:.1e}; induced arc maxH(0) = {:.6f}; true arc maxH = {:.1e}",
                            to_string(ak.status), vn, induced.max_residual, truth.max_residual)};
}

// 5 ---------------------------------------------------------------------------
Outcome zero_terminal() {
  double worst = 0.0;
  for (const char* name : {"planar", "oscillator", "ramsey"}) {
    LoadedModel model = builtin_model(name);
    if (std::string(name) == "planar") model.C = Vec::Constant(2, 0.4);
    const Reference ref = model.reference(21.0);
    for (double th : {5.0, 10.0, 20.0}) {
      const CostateArc back = costate_from_terminal(model.system, ref.process, Row::Zero(model.system.state_dim), th, 1.0);
      worst = std::max(worst, (back.psi(0.0) + cost_gradient(model.system, ref.process, th)).norm());
    }
  }
  return {worst < 1e-6, fmt::format("max |psi_theta(0) + dJ/dx| = {:.2e} over 3 models x 3 horizons", worst)};
}

// 6 ---------------------------------------------------------------------------
Outcome gradient_fd() {
  IntegratorOptions tight;
  tight.tol = {1e-12, 1e-12};
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-1.0, 1.0), unit(0.0, 1.0);
  const std::vector<std::string> names{"planar", "oscillator", "ramsey", "stable-linear"};
  double worst = 0.0;
  for (int k = 0; k < 30; ++k) {
    LoadedModel model = builtin_model(names[static_cast<std::size_t>(k) % names.size()]);
    const ControlSystem& s = model.system;
    double theta = 1.0 + 9.0 * unit(rng);
    Vec x = model.x_star;
    if (model.family == ModelFamily::SDriven) {
      model.C = Vec::Constant(s.state_dim, 0.5 * U(rng));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += 0.3 * U(rng);
      if (model.sdriven->m == 1) theta = 0.5 + 3.5 * unit(rng);
    } else if (model.family == ModelFamily::Ramsey) {
      x[0] += 0.5 * unit(rng);
    } else {
      x[0] += U(rng);
    }
    const Reference ref = model.reference(theta + 1.0, tight);
    const ControlSignal u = ref.process.control();
    const Process p = integrate_process(s, x, 0.0, u, theta, tight);
    const Row g = cost_gradient(s, p, theta, tight);
    Row fd(s.state_dim);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < s.state_dim; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd[i] = (eval_cost(integrate_process(s, xp, 0.0, u, theta, tight), theta) -
               eval_cost(integrate_process(s, xm, 0.0, u, theta, tight), theta)) /
              (2 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
  }
  return {worst < 1e-4, fmt::format("max |g - g_fd| / max(1, |g_fd|) = {:.2e} over 30 probes", worst)};
}

// 7 ---------------------------------------------------------------------------
Outcome ramsey_saddle() {
  const RamseyModel m = ramsey_preset();
  const ControlSystem s = ramsey_system(m);
  const RamseyStationary st = ramsey_stationary(m);
  const bool stationary = std::abs(st.x0 - 4.0) < 1e-10 && std::abs(st.u0 - 2.0) < 1e-10;
  const RamseyLinearization lin = ramsey_linearize(m, st);
  const bool saddle = lin.lambda_unstable > 0.0 && lin.lambda_stable < 0.0;
  const SaddlePath path = ramsey_saddle_path(m, 110.0);
  auto dist = [&](double T) {
    return std::hypot(path.process.state_at(T)[0] - st.x0, path.process.control()(T)[0] - st.u0);
  };
  const double d40 = dist(40.0), d100 = dist(100.0);
  double t_needed = 40.0;
  while (t_needed < 110.0 && dist(t_needed) >= 1e-3) t_needed += 0.5;
  const MaxHResult mh = maxh_residual(s, path.process, path.arc, linspace(0.0, 60.0, 61), scalar_grid(0.05, 6.0, 600));
  double liminf = INFINITY;
  for (double c : {0.5, 0.8, 1.0}) {
    const Process q = integrate_process(s, Vec::Constant(1, m.x_star), 0.0, ControlSignal::constant(Vec::Constant(1, c)),
                                        100.0);
    liminf = std::min(liminf, overtaking_compare(s, path.process, q, linspace(20.0, 100.0, 9)).tail_liminf);
  }
  const bool at40 = d40 < 1e-3;
  const bool pass = stationary && saddle && at40 && mh.max_residual < 1e-5 && liminf >= -1e-3;
  return {pass, fmt::format("x0 = {:.12f}, u0 = {:.12f}; eigenvalues {:.6f}, {:.6f}; |(y,u)(40) - (4,2)| = {:.2e} "
                            "[{}; < 1e-3 first at T = {:.1f}, {:.1e} at T = 100]; maxH = {:.1e}; overtaking liminf = {:.3f}",
                            st.x0, st.u0, lin.lambda_unstable, lin.lambda_stable, d40, at40 ? "ok" : "too slow",
                            t_needed, d100, mh.max_residual, liminf)};
}

// 8 ---------------------------------------------------------------------------
Outcome akk_strictness() {
  const SDrivenModel m = planar_model();
  const ControlSystem s = sdriven_system(m);
  const LimitSchedule sched = LimitSchedule::default_schedule();
  const AnalyticArc ref = sdriven_candidate(m, Vec::Zero(2), sched.max_theta() + 1.0);
  const GradientSampleSet set = wakk_samples(s, ref.process, sched, 20240501);
  const ConeDescriptor cone = normal_cone(s.c_as, m.x_star);
  const auto seqs = phase_shifted_sequences({0.0, kPi / 2, kPi, 3 * kPi / 2}, 10);
  std::vector<double> radii;
  for (int n = 1; n <= 10; ++n) radii.push_back(0.5 * std::pow(0.6, n));
  AkkOptions opt;
  opt.samples_per_level = 4;
  opt.seed = 20240501;
  const Row base = sdriven_Sx(m, 0.0, m.x_star);
  std::mt19937_64 rng(8);
  int wakk_accepted = 0, akk_rejected = 0;
  for (int k = 0; k < 10; ++k) {
    const Row psi0 = base + random_in_ball(rng, 0.2, 0.9).transpose();
    if (!wakk_check(psi0, 1.0, set, cone, 5e-2).member) continue;
    ++wakk_accepted;
    akk_rejected += !akk_check(psi0, 1.0, s, ref.process, seqs, radii, cone, 5e-2, opt).member;
  }
  return {wakk_accepted > 0 && akk_rejected == wakk_accepted,
          fmt::format("akk rejects {}/{} co-states that wakk accepts (4 phase-shifted sequences)", akk_rejected,
                      wakk_accepted)};
}

// 9 ---------------------------------------------------------------------------
Outcome dsl() {
  const std::vector<std::string> vars{"t", "x1", "x2", "u1"};
  double worst = 0.0;
  int fixpoints = 0;
  const auto& bat = ihoc::testing::battery();
  for (const auto& b : bat) {
    const Expr e = parse_expr(b.text);
    const DualValue d = eval_dual(e, ihoc::testing::bindings(b), vars);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const double fd = ihoc::testing::central_difference(e, b, vars[i]);
      worst = std::max(worst, std::abs(d.partials[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    const std::string once = print_expr(e);
    fixpoints += print_expr(parse_expr(once)) == once;
  }
  const int n = static_cast<int>(bat.size());
  return {worst < 1e-7 && fixpoints == n,
          fmt::format("max relative dual/FD gap {:.1e} on {} expressions; {}/{} print-parse fixpoints", worst, n,
                      fixpoints, n)};
}

// 10 --------------------------------------------------------------------------
Outcome determinism(const std::string& work_dir) {
  const std::string dir = work_dir + "/wakk";
  const std::vector<std::string> args{"ihoc", "wakk", "--builtin", "planar", "--C", "0.3,0.4", "--seed", "7",
                                      "--out", dir};
  auto read = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::ostringstream sink;
  const int a = run_cli(args, sink, sink);
  const std::string w1 = read(dir + "/wakk.json"), h1 = read(dir + "/hull.json");
  const int b = run_cli(args, sink, sink);
  const std::string w2 = read(dir + "/wakk.json"), h2 = read(dir + "/hull.json");
  const bool same = !w1.empty() && w1 == w2 && h1 == h2;
  return {a == b && same, fmt::format("exit codes {} and {}; wakk.json {} bytes, reports {}", a, b, w1.size(),
                                      same ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> expect_red;
  std::string work_dir = "acceptance_out";
  app.add_option("--expect-red", expect_red, "Criteria known to be unattainable")->delimiter(',');
  app.add_option("--work-dir", work_dir, "Scratch directory for CLI runs");
  CLI11_PARSE(app, argc, argv);
  std::filesystem::create_directories(work_dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"planar cost identity", cost_identity},
      {"planar adjoint closure", adjoint_closure},
      {"wakk disk", wakk_disk},
      {"ak inconsistency", ak_inconsistency},
      {"zero-terminal identity", zero_terminal},
      {"gradient vs finite differences", gradient_fd},
      {"ramsey saddle", ramsey_saddle},
      {"akk strictness", akk_strictness},
      {"expression language", dsl},
      {"determinism", [&] { return determinism(work_dir); }},
  };
  const std::set<int> expected(expect_red.begin(), expect_red.end());
  bool as_expected = true;
  int passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const Error& e) {
      o = {false, fmt::format("error {}: {}", to_string(e.kind()), e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    passed += o.pass;
    const bool red_expected = expected.count(id) > 0;
    as_expected = as_expected && (o.pass != red_expected);
    fmt::print("{} {:>2} {}: {} ({:.1f} s){}\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail, secs,
               !o.pass && red_expected ? " [known red]" : "");
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria pass\n", passed, criteria.size());
  return as_expected ? 0 : 1;
}
