#include "ihoc/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"

#include "ihoc/error.hpp"
#include "ihoc/report.hpp"
#include "ihoc/verify.hpp"

namespace ihoc {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 20240501;

struct Common {
  std::string model_path;
  std::string builtin;
  std::string out_dir = ".";
  std::string format = "all";
  bool timestamp = false;
  double rtol = 1e-9;
  double atol = 1e-9;
};

struct Schedule {
  double theta_min = 2.0 * std::numbers::pi;
  double theta_max = 40.0 * std::numbers::pi;
  int levels = 12;
  double kappa0 = 0.5;
  double q = 0.6;
  int samples = 64;
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

Vec parse_vector(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      config_error(fmt::format("{} expects comma-separated numbers, got '{}'", flag, text));
    }
    values.push_back(v);
    pos = end + 1;
  }
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

template <typename Derived>
json to_array(const Eigen::DenseBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void add_common(CLI::App* app, Common& c, bool model_required = true) {
  auto* model = app->add_option("--model", c.model_path, "Model JSON file");
  auto* builtin = app->add_option("--builtin", c.builtin, "Built-in model")
                      ->check(CLI::IsMember({"planar", "oscillator", "ramsey", "stable-linear"}));
  model->excludes(builtin);
  if (model_required) app->callback([app] {
      if (app->count("--model") + app->count("--builtin") == 0) throw CLI::RequiredError("--model or --builtin");
    });
  app->add_option("--out", c.out_dir, "Output directory");
  app->add_option("--format", c.format, "Outputs to write")->check(CLI::IsMember({"csv", "json", "all"}));
  app->add_flag("--timestamp", c.timestamp, "Add a timestamp field to reports");
  app->add_option("--rtol", c.rtol, "Integrator relative tolerance")->check(CLI::PositiveNumber);
  app->add_option("--atol", c.atol, "Integrator absolute tolerance")->check(CLI::PositiveNumber);
}

void add_schedule(CLI::App* app, Schedule& s, bool sampling) {
  app->add_option("--theta-min", s.theta_min, "First horizon")->check(CLI::PositiveNumber);
  app->add_option("--theta-max", s.theta_max, "Last horizon")->check(CLI::PositiveNumber);
  app->add_option("--levels", s.levels, "Number of horizons")->check(CLI::Range(2, 100000));
  if (sampling) {
    app->add_option("--kappa0", s.kappa0, "Radius scale")->check(CLI::PositiveNumber);
    app->add_option("--q", s.q, "Radius ratio")->check(CLI::Range(1e-6, 1.0 - 1e-12));
    app->add_option("--samples", s.samples, "Samples per level")->check(CLI::Range(1, 1000000));
  }
}

LoadedModel load(const Common& c) {
  if (!c.builtin.empty()) return builtin_model(c.builtin);
  return load_model_file(c.model_path);
}

std::string model_label(const Common& c) { return c.builtin.empty() ? c.model_path : "builtin:" + c.builtin; }

IntegratorOptions integrator(const Common& c) {
  IntegratorOptions o;
  o.tol.rel = c.rtol;
  o.tol.abs = c.atol;
  return o;
}

json common_config(const Common& c) {
  return {{"model", model_label(c)}, {"out", c.out_dir}, {"format", c.format}, {"rtol", c.rtol}, {"atol", c.atol}};
}

json schedule_config(const Schedule& s) {
  return {{"theta_min", s.theta_min}, {"theta_max", s.theta_max}, {"levels", s.levels},
          {"kappa0", s.kappa0},       {"q", s.q},                 {"samples", s.samples}};
}

bool want_json(const Common& c) { return c.format != "csv"; }
bool want_csv(const Common& c) { return c.format != "json"; }

std::string out_path(const Common& c, const std::string& file) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) config_error(fmt::format("cannot create output directory '{}': {}", c.out_dir, ec.message()));
  return (std::filesystem::path(c.out_dir) / file).string();
}

void write_text(const std::string& path, const auto& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) config_error(fmt::format("cannot write '{}'", path));
  writer(f);
}

void apply_C(LoadedModel& model, const std::string& C) {
  if (C.empty()) return;
  if (model.family != ModelFamily::SDriven) config_error("--C applies to sdriven models only");
  model.C = parse_vector(C, "--C");
  if (model.C.size() != model.system.state_dim) config_error(fmt::format("--C must have {} entries", model.system.state_dim));
}

std::vector<double> geometric_thetas(const Schedule& s) {
  if (!(s.theta_max > s.theta_min)) config_error("--theta-max must exceed --theta-min");
  std::vector<double> out;
  const double ratio = std::pow(s.theta_max / s.theta_min, 1.0 / (s.levels - 1));
  for (int n = 0; n < s.levels; ++n) out.push_back(n == s.levels - 1 ? s.theta_max : s.theta_min * std::pow(ratio, n));
  return out;
}

// simulate -----------------------------------------------------------------

int cmd_simulate(const Common& c, double span, const std::string& C, std::ostream& out) {
  LoadedModel model = load(c);
  apply_C(model, C);
  const IntegratorOptions opts = integrator(c);
  Process process = [&] {
    if (model.family == ModelFamily::Ramsey) return model.reference(span, opts).process;
    ControlSignal u = model.family == ModelFamily::SDriven
                          ? ControlSignal::analytic(model.system.control_dim,
                                                    [C = model.C](double t) -> Vec { return 2.0 * std::exp(-t) * C; })
                          : custom_reference_control(*model.custom);
    return integrate_process(model.system, model.x_star, 0.0, u, span, opts);
  }();
  const Vec y_end = process.state_at(span);
  const double w_end = process.cost_at(span);
  if (want_csv(c)) write_text(out_path(c, "trajectory.csv"), [&](std::ostream& f) { write_process_csv(f, process); });
  if (want_json(c)) {
    json config = common_config(c);
    config["theta_max"] = span;
    if (model.family == ModelFamily::SDriven) config["C"] = to_array(model.C);
    ReportHeader h{"simulate", model_label(c), &model, config, 0, nullptr,
                   {{"rtol", c.rtol}, {"atol", c.atol}}, c.timestamp};
    json results = {{"t_end", span}, {"y_end", to_array(y_end)}, {"w_end", w_end},
                    {"nodes", process.times().size()}};
    write_json_file(out_path(c, "simulate.json"), make_report(h, results));
  }
  fmt::print(out, "simulate: y({:.6g}) = [{}], w = {:.16e}\n", span, fmt::join(y_end.data(), y_end.data() + y_end.size(), ", "),
             w_end);
  return kExitOk;
}

// gradient -----------------------------------------------------------------

int cmd_gradient(const Common& c, double theta, const std::string& x_text, const std::string& C, std::ostream& out) {
  LoadedModel model = load(c);
  apply_C(model, C);
  const IntegratorOptions opts = integrator(c);
  const Vec x = x_text.empty() ? model.x_star : parse_vector(x_text, "--x");
  if (x.size() != model.system.state_dim) config_error(fmt::format("--x must have {} entries", model.system.state_dim));
  const Reference ref = model.reference(theta, opts);
  const Process process = integrate_process(model.system, x, 0.0, ref.process.control(), theta, opts);
  const SensitivityPath sens = transition_matrix(model.system, process, theta, opts);
  const Row g = sens.g(theta);
  if (want_csv(c)) write_text(out_path(c, "sensitivity.csv"), [&](std::ostream& f) { write_sensitivity_csv(f, sens); });
  if (want_json(c)) {
    json config = common_config(c);
    config["theta"] = theta;
    config["x"] = to_array(x);
    if (model.family == ModelFamily::SDriven) config["C"] = to_array(model.C);
    ReportHeader h{"gradient", model_label(c), &model, config, 0, nullptr,
                   {{"rtol", c.rtol}, {"atol", c.atol}}, c.timestamp};
    json results = {{"gradient", to_array(g)},
                    {"cost", process.cost_at(theta)},
                    {"max_condition", sens.max_condition()},
                    {"singular_warning", sens.singular_warning()}};
    write_json_file(out_path(c, "gradient.json"), make_report(h, results));
  }
  fmt::print(out, "gradient: dJ/dx(x; {:.6g}) = [{}]\n", theta, fmt::join(g.data(), g.data() + g.size(), ", "));
  return kExitOk;
}

// ak -----------------------------------------------------------------------

int cmd_ak(const Common& c, const Schedule& s, int window, double tol, std::ostream& out) {
  LoadedModel model = load(c);
  const IntegratorOptions opts = integrator(c);
  const std::vector<double> thetas = geometric_thetas(s);
  if (window < 2 || window > s.levels) config_error("--window must lie in [2, levels]");
  const Reference ref = model.reference(s.theta_max, opts);
  const AkResult ak = ak_limit(model.system, ref.process, thetas, static_cast<std::size_t>(window), tol, 1e8, opts);

  std::vector<double> psiA;
  std::string arc_source = "none";
  std::optional<CostateArc> arc = ref.arc;
  if (arc) {
    arc_source = "reference";
  } else if (ak.status == AkStatus::Converged) {
    arc = ak_arc(model.system, ref.process, ak.v, opts);
    arc_source = "ak";
  }
  if (arc) {
    const SensitivityPath sens = transition_matrix(model.system, ref.process, s.theta_max, opts);
    for (double th : thetas) psiA.push_back(psiA_residual(*arc, sens, th));
  }
  if (want_csv(c)) write_text(out_path(c, "partials.csv"), [&](std::ostream& f) { write_partials_csv(f, ak, psiA); });
  if (want_json(c)) {
    json config = common_config(c);
    config["schedule"] = schedule_config(s);
    config["window"] = window;
    json sched = {{"thetas", thetas}};
    ReportHeader h{"ak", model_label(c), &model, config, 0, sched,
                   {{"tol", tol}, {"rtol", c.rtol}, {"atol", c.atol}}, c.timestamp};
    json results = to_json(ak);
    results["psiA_arc"] = arc_source;
    results["psiA"] = psiA;
    write_json_file(out_path(c, "ak.json"), make_report(h, results));
  }
  fmt::print(out, "ak: {} (tail diameter {:.3e})", to_string(ak.status), ak.tail_diameter);
  if (ak.status == AkStatus::Converged) fmt::print(out, " v = [{}]", fmt::join(ak.v.data(), ak.v.data() + ak.v.size(), ", "));
  out << '\n';
  return ak.status == AkStatus::Converged ? kExitOk : kExitNegative;
}

// wakk ---------------------------------------------------------------------

struct WakkFlags {
  std::uint64_t seed = kDefaultSeed;
  double tol = 5e-2;
  int lambda = 1;
  std::string psi0;
  std::string C;
  bool akk = false;
  std::vector<double> phases{0.0, std::numbers::pi / 2.0, std::numbers::pi, 3.0 * std::numbers::pi / 2.0};
  int akk_count = 10;
  int akk_samples = 8;
};

int cmd_wakk(const Common& c, const Schedule& s, const WakkFlags& w, std::ostream& out) {
  LoadedModel model = load(c);
  apply_C(model, w.C);
  const IntegratorOptions opts = integrator(c);
  LimitSchedule schedule =
      LimitSchedule::geometric(s.theta_min, s.theta_max, s.levels, s.kappa0, s.q, s.samples, static_cast<double>(w.lambda));
  schedule.validate();

  double span = schedule.max_theta();
  std::vector<std::vector<double>> sequences;
  if (w.akk) {
    sequences = phase_shifted_sequences(w.phases, w.akk_count);
    for (const auto& seq : sequences) span = std::max(span, seq.back());
  }
  const Reference ref = model.reference(span + 1.0, opts);

  Row psi0;
  std::string psi0_source;
  if (!w.psi0.empty()) {
    psi0 = parse_vector(w.psi0, "--psi0").transpose();
    psi0_source = "flag";
  } else if (model.psi0) {
    psi0 = *model.psi0;
    psi0_source = "model";
  } else if (ref.arc) {
    psi0 = ref.arc->psi(0.0);
    psi0_source = "reference";
  } else {
    config_error("--psi0 is required for models without a reference co-state");
  }
  if (psi0.size() != model.system.state_dim) config_error(fmt::format("--psi0 must have {} entries", model.system.state_dim));

  const GradientSampleSet samples = wakk_samples(model.system, ref.process, schedule, w.seed, opts);
  const ConeDescriptor cone = normal_cone(model.system.c_as, ref.process.initial_state());
  const WakkResult result = wakk_check(psi0, static_cast<double>(w.lambda), samples, cone, w.tol);

  std::optional<AkkResult> akk;
  if (w.akk) {
    std::vector<double> radii;
    for (int i = 0; i < w.akk_count; ++i) radii.push_back(s.kappa0 * std::pow(s.q, i + 1));
    AkkOptions ao;
    ao.samples_per_level = w.akk_samples;
    ao.seed = w.seed;
    ao.integrator = opts;
    akk = akk_check(psi0, static_cast<double>(w.lambda), model.system, ref.process, sequences, radii, cone, w.tol, ao);
  }

  if (want_json(c)) {
    json config = common_config(c);
    config["schedule"] = schedule_config(s);
    config["lambda"] = w.lambda;
    config["psi0"] = to_array(psi0);
    config["psi0_source"] = psi0_source;
    if (model.family == ModelFamily::SDriven) config["C"] = to_array(model.C);
    if (w.akk) config["akk"] = {{"phases", w.phases}, {"count", w.akk_count}, {"samples", w.akk_samples}};
    ReportHeader h{"wakk", model_label(c), &model, config, w.seed, to_json(schedule),
                   {{"tol", w.tol}, {"rtol", c.rtol}, {"atol", c.atol}}, c.timestamp};
    json results = {{"wakk", to_json(result)}, {"samples", to_json(samples)}};
    if (akk) results["akk"] = to_json(*akk);
    write_json_file(out_path(c, "wakk.json"), make_report(h, results));
    json hull = {{"schema", "ihoc-hull/1"}, {"dim", result.cloud.dim()}};
    json gens = json::array();
    for (const Vec& p : result.cloud.points()) gens.push_back(to_array(p));
    hull["generators"] = gens;
    if (result.hull) hull["hull"] = to_json(*result.hull);
    hull["cone"] = to_json(cone);
    hull["target"] = to_array(result.target);
    write_json_file(out_path(c, "hull.json"), hull);
  }
  fmt::print(out, "wakk: {} (gap {:.3e}, {} pooled samples)\n", result.member ? "member" : "non-member", result.gap,
             result.cloud.size());
  if (akk) fmt::print(out, "akk: {}\n", akk->member ? "member" : "non-member");
  const bool ok = result.member && (!akk || akk->member);
  return ok ? kExitOk : kExitNegative;
}

// verify -------------------------------------------------------------------

int cmd_verify(const Common& c, const std::string& name, std::ostream& out) {
  const SuiteResult r = run_suite(name);
  for (const CheckLine& line : r.checks) fmt::print(out, "{} {}: {}\n", line.pass ? "PASS" : "FAIL", line.name, line.detail);
  if (want_json(c)) {
    json checks = json::array();
    for (const CheckLine& line : r.checks) checks.push_back({{"name", line.name}, {"pass", line.pass}, {"detail", line.detail}});
    ReportHeader h{"verify", "builtin:" + name, nullptr, {{"suite", name}, {"out", c.out_dir}}, 1, nullptr, nullptr,
                   c.timestamp};
    const json results = {{"suite", name}, {"pass", r.pass()}, {"checks", checks}, {"data", r.data}};
    write_json_file(out_path(c, fmt::format("verify_{}.json", name)), make_report(h, results));
  }
  fmt::print(out, "verify {}: {}\n", name, r.pass() ? "pass" : "fail");
  return r.pass() ? kExitOk : kExitNegative;
}

// ramsey -------------------------------------------------------------------

int cmd_ramsey(const Common& c, double horizon, double spacing, std::ostream& out) {
  LoadedModel model = c.model_path.empty() && c.builtin.empty() ? builtin_model("ramsey") : load(c);
  if (model.family != ModelFamily::Ramsey) config_error("the ramsey command needs a ramsey model");
  const RamseyModel& rm = *model.ramsey;
  const RamseyStationary st = ramsey_stationary(rm);
  const RamseyLinearization lin = ramsey_linearize(rm, st);
  const SaddlePath path = ramsey_saddle_path(rm, horizon);
  const Vec y_end = path.process.state_at(horizon);
  const double u_end = path.process.control()(horizon)[0];
  const double dist = std::hypot(y_end[0] - st.x0, u_end - st.u0);

  if (want_csv(c)) {
    write_text(out_path(c, "saddle.csv"), [&](std::ostream& f) {
      f << "t,y,u,psi,w\n";
      const auto n = static_cast<std::size_t>(std::ceil(horizon / spacing));
      for (std::size_t i = 0; i <= n; ++i) {
        const double t = i == n ? horizon : horizon * static_cast<double>(i) / static_cast<double>(n);
        fmt::print(f, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", t, path.process.state_at(t)[0],
                   path.process.control()(t)[0], path.arc.psi(t)[0], path.process.cost_at(t));
      }
    });
  }
  if (want_json(c)) {
    json config = common_config(c);
    config["model"] = c.model_path.empty() && c.builtin.empty() ? "builtin:ramsey" : model_label(c);
    config["horizon"] = horizon;
    config["spacing"] = spacing;
    ReportHeader h{"ramsey", config["model"].get<std::string>(), &model, config, 0, nullptr,
                   {{"saddle_tol", 1e-10}}, c.timestamp};
    json jac = json::array();
    for (int i = 0; i < 2; ++i) jac.push_back({lin.jacobian(i, 0), lin.jacobian(i, 1)});
    json results = {{"stationary", {{"x0", st.x0}, {"u0", st.u0}}},
                    {"jacobian", jac},
                    {"eigenvalues", {{"unstable", lin.lambda_unstable}, {"stable", lin.lambda_stable}}},
                    {"stable_direction", {lin.stable_direction[0], lin.stable_direction[1]}},
                    {"t_seed", path.t_seed},
                    {"u_initial", path.process.control()(0.0)[0]},
                    {"psi_initial", path.arc.psi(0.0)[0]},
                    {"state_end", {{"y", y_end[0]}, {"u", u_end}}},
                    {"distance_end", dist}};
    write_json_file(out_path(c, "ramsey.json"), make_report(h, results));
  }
  fmt::print(out, "ramsey: x0 = {:.12f}, u0 = {:.12f}, eigenvalues {:.6f}, {:.6f}, |(y,u)({:.6g}) - (x0,u0)| = {:.3e}\n",
             st.x0, st.u0, lin.lambda_unstable, lin.lambda_stable, horizon, dist);
  return kExitOk;
}

bool is_config_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::SyntaxError:
    case ErrorKind::UnknownIdentifier:
    case ErrorKind::InvalidArgument:
    case ErrorKind::DimensionMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transversality conditions for infinite-horizon optimal control", "ihoc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ihoc 1.0.0");

  Common common;
  Schedule sched;
  double span = 10.0, theta = 10.0, tol_ak = 1e-6, horizon = 100.0, spacing = 0.1;
  int window = 4;
  std::string C, x_text, suite;
  WakkFlags wf;

  auto* sim = app.add_subcommand("simulate", "Integrate the reference process");
  add_common(sim, common);
  sim->add_option("--theta-max", span, "Horizon")->check(CLI::PositiveNumber);
  sim->add_option("--C", C, "Candidate parameter of sdriven models");

  auto* grad = app.add_subcommand("gradient", "Cost gradient dJ/dx at a horizon");
  add_common(grad, common);
  grad->add_option("--theta", theta, "Horizon")->check(CLI::PositiveNumber);
  grad->add_option("--x", x_text, "Initial state (default x*)");
  grad->add_option("--C", C, "Candidate parameter of sdriven models");

  auto* ak = app.add_subcommand("ak", "Partial integrals of the co-state limit formula");
  add_common(ak, common);
  add_schedule(ak, sched, false);
  ak->add_option("--window", window, "Tail window");
  ak->add_option("--tol", tol_ak, "Convergence tolerance")->check(CLI::PositiveNumber);

  auto* wakk = app.add_subcommand("wakk", "Limiting-gradient transversality check");
  add_common(wakk, common);
  add_schedule(wakk, sched, true);
  wakk->add_option("--seed", wf.seed, "Sampling seed");
  wakk->add_option("--tol", wf.tol, "Membership tolerance")->check(CLI::PositiveNumber);
  wakk->add_option("--lambda", wf.lambda, "Multiplier")->check(CLI::IsMember({0, 1}));
  wakk->add_option("--psi0", wf.psi0, "Co-state at 0 (comma-separated)");
  wakk->add_option("--C", wf.C, "Candidate parameter of sdriven models");
  wakk->add_flag("--akk", wf.akk, "Also run the strengthened check");
  wakk->add_option("--phases", wf.phases, "Phases of the horizon sequences")->delimiter(',');
  wakk->add_option("--akk-count", wf.akk_count, "Horizons per sequence")->check(CLI::Range(2, 10000));
  wakk->add_option("--akk-samples", wf.akk_samples, "Samples per horizon")->check(CLI::Range(1, 100000));

  auto* ver = app.add_subcommand("verify", "Built-in regression suite");
  ver->add_option("suite", suite, "planar | oscillator | ramsey")->required();
  ver->add_option("--out", common.out_dir, "Output directory");
  ver->add_option("--format", common.format, "Outputs to write")->check(CLI::IsMember({"csv", "json", "all"}));
  ver->add_flag("--timestamp", common.timestamp, "Add a timestamp field to reports");

  auto* ram = app.add_subcommand("ramsey", "Stationary point and saddle path of a growth model");
  add_common(ram, common, false);
  ram->add_option("--horizon", horizon, "Horizon")->check(CLI::PositiveNumber);
  ram->add_option("--spacing", spacing, "CSV row spacing")->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(common, span, C, out);
    if (*grad) return cmd_gradient(common, theta, x_text, C, out);
    if (*ak) return cmd_ak(common, sched, window, tol_ak, out);
    if (*wakk) return cmd_wakk(common, sched, wf, out);
    if (*ver) return cmd_verify(common, suite, out);
    if (*ram) return cmd_ramsey(common, horizon, spacing, out);
  } catch (const Error& e) {
    fmt::print(err, "error [{}]: {}\n", to_string(e.kind()), e.what());
    return is_config_kind(e.kind()) ? kExitUsage : kExitNumeric;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace ihoc
