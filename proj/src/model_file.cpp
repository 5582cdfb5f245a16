#include "ihoc/model_file.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "ihoc/error.hpp"

namespace ihoc {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) config_error(fmt::format("missing key '{}'", key));
  return doc.at(key);
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) config_error(fmt::format("key '{}' must be a number", key));
  return j.get<double>();
}

int integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) config_error(fmt::format("key '{}' must be an integer", key));
  return j.get<int>();
}

std::string text(const json& j, const std::string& key) {
  if (!j.is_string()) config_error(fmt::format("key '{}' must be a string", key));
  return j.get<std::string>();
}

double bound(const json& j, const std::string& key) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  return number(j, key);
}

Vec vector_of(const json& j, const std::string& key, Eigen::Index dim = -1) {
  if (j.is_number() && (dim == -1 || dim == 1)) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) config_error(fmt::format("key '{}' must be an array of numbers", key));
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = bound(j[i], fmt::format("{}[{}]", key, i));
  if (dim >= 0 && v.size() != dim) config_error(fmt::format("key '{}' must have {} entries", key, dim));
  return v;
}

Expr expression(const json& j, const std::string& key) {
  const std::string s = text(j, key);
  try {
    return parse_expr(s);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("key '{}': {}", key, e.what()), e.offset());
  }
}

ControlSet control_set_of(const json& j, Eigen::Index k) {
  const std::string kind = text(require(j, "kind"), "control_set.kind");
  if (kind == "whole") return ControlSet::whole_space();
  if (kind == "box") {
    return ControlSet::box(vector_of(require(j, "lower"), "control_set.lower", k),
                           vector_of(require(j, "upper"), "control_set.upper", k));
  }
  if (kind == "finite") {
    const json& vals = require(j, "values");
    if (!vals.is_array() || vals.empty()) config_error("key 'control_set.values' must be a non-empty array");
    std::vector<Vec> out;
    for (std::size_t i = 0; i < vals.size(); ++i) out.push_back(vector_of(vals[i], fmt::format("control_set.values[{}]", i), k));
    return ControlSet::finite(std::move(out));
  }
  config_error(fmt::format("key 'control_set.kind' has unknown value '{}'", kind));
}

ConstraintSet constraint_of(const json& j, const std::string& key, Eigen::Index m) {
  const std::string kind = text(require(j, "kind"), key + ".kind");
  if (kind == "whole") return ConstraintSet::whole_space();
  if (kind == "point") return ConstraintSet::point(vector_of(require(j, "point"), key + ".point", m));
  if (kind == "half_line") {
    Vec lower = vector_of(require(j, "lower"), key + ".lower", m);
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (std::isnan(lower[i])) lower[i] = -std::numeric_limits<double>::infinity();
    }
    return ConstraintSet::half_line(std::move(lower));
  }
  if (kind == "box") {
    return ConstraintSet::box(vector_of(require(j, "lower"), key + ".lower", m),
                              vector_of(require(j, "upper"), key + ".upper", m));
  }
  config_error(fmt::format("key '{}.kind' has unknown value '{}'", key, kind));
}

std::vector<Expr> expression_list(const json& j, const std::string& key, std::size_t n) {
  if (n == 1 && j.is_string()) return {expression(j, key)};
  if (!j.is_array() || j.size() != n) config_error(fmt::format("key '{}' must be an array of {} expressions", key, n));
  std::vector<Expr> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(expression(j[i], fmt::format("{}[{}]", key, i)));
  return out;
}

}  // namespace

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::SDriven: return "sdriven";
    case ModelFamily::Ramsey: return "ramsey";
    case ModelFamily::Custom: return "custom";
  }
  return "?";
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

LoadedModel load_model_json(const json& doc, const std::string& digest) {
  if (!doc.is_object()) config_error("model document must be a JSON object");
  LoadedModel out;
  out.source = doc;
  out.digest = digest.empty() ? fnv1a_hex(doc.dump()) : digest;
  const std::string family = text(require(doc, "family"), "family");
  out.name = doc.contains("name") ? text(doc.at("name"), "name") : family;

  if (family == "sdriven") {
    out.family = ModelFamily::SDriven;
    SDrivenModel m;
    m.name = out.name;
    m.m = integer(require(doc, "m"), "m");
    if (m.m < 1) config_error("key 'm' must be >= 1");
    m.S = expression(require(doc, "S"), "S");
    m.x_star = doc.contains("x_star") ? vector_of(doc.at("x_star"), "x_star", m.m) : Vec::Zero(m.m);
    out.C = doc.contains("C") ? vector_of(doc.at("C"), "C", m.m) : Vec::Zero(m.m);
    out.system = sdriven_system(m);
    out.x_star = m.x_star;
    out.sdriven = std::move(m);
  } else if (family == "ramsey") {
    out.family = ModelFamily::Ramsey;
    RamseyModel m;
    m.f = expression(require(doc, "f"), "f");
    m.f0 = expression(require(doc, "f0"), "f0");
    m.rho = number(require(doc, "rho"), "rho");
    m.x_star = number(require(doc, "x_star"), "x_star");
    try {
      ramsey_check(m);
    } catch (const Error& e) {
      config_error(fmt::format("ramsey hypotheses: {}", e.what()));
    }
    out.system = ramsey_system(m);
    out.x_star = Vec::Constant(1, m.x_star);
    out.ramsey = std::move(m);
  } else if (family == "custom") {
    out.family = ModelFamily::Custom;
    CustomModel m;
    m.name = out.name;
    m.m = integer(require(doc, "m"), "m");
    m.k = integer(require(doc, "k"), "k");
    if (m.m < 1 || m.k < 1) config_error("keys 'm' and 'k' must be >= 1");
    m.f = expression_list(require(doc, "f"), "f", static_cast<std::size_t>(m.m));
    m.f0 = expression(require(doc, "f0"), "f0");
    m.l = doc.contains("l") ? expression(doc.at("l"), "l") : Expr::literal(0.0);
    m.x_star = vector_of(require(doc, "x_star"), "x_star", m.m);
    m.u_ref = expression_list(require(doc, "u_ref"), "u_ref", static_cast<std::size_t>(m.k));
    m.control_set = doc.contains("control_set") ? control_set_of(doc.at("control_set"), m.k) : ControlSet::whole_space();
    m.c0 = doc.contains("c0") ? constraint_of(doc.at("c0"), "c0", m.m) : ConstraintSet::point(m.x_star);
    m.c_as = doc.contains("c_as") ? constraint_of(doc.at("c_as"), "c_as", m.m) : ConstraintSet::whole_space();
    out.system = custom_system(m);
    out.x_star = m.x_star;
    out.custom = std::move(m);
  } else {
    config_error(fmt::format("key 'family' has unknown value '{}'", family));
  }
  if (doc.contains("psi0")) out.psi0 = vector_of(doc.at("psi0"), "psi0", out.system.state_dim).transpose();
  return out;
}

LoadedModel load_model_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(fmt::format("model file is not valid JSON (byte {}): {}", e.byte, e.what()));
  }
  return load_model_json(doc, fnv1a_hex(text));
}

LoadedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error(fmt::format("cannot open model file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model_text(ss.str());
}

LoadedModel builtin_model(const std::string& name) {
  json doc;
  if (name == "planar") {
    doc = {{"family", "sdriven"}, {"name", "planar"}, {"m", 2}, {"S", "x1*sin(t) - x2*cos(t)"}, {"x_star", {0.0, 0.0}}};
  } else if (name == "oscillator") {
    doc = {{"family", "sdriven"}, {"name", "oscillator"}, {"m", 1}, {"S", "exp(-t)*sin(exp(t)*x1) - exp(-x1^2)"},
           {"x_star", {0.0}}};
  } else if (name == "ramsey") {
    doc = {{"family", "ramsey"}, {"name", "ramsey"}, {"f", "sqrt(x1)"}, {"f0", "-ln(u1)"}, {"rho", 0.25}, {"x_star", 1.0}};
  } else if (name == "stable-linear") {
    doc = {{"family", "custom"}, {"name", "stable-linear"}, {"m", 1}, {"k", 1}, {"f", {"-x1 + u1"}}, {"f0", "x1^2"},
           {"x_star", {1.0}}, {"u_ref", {"0"}}};
  } else {
    config_error(fmt::format("unknown built-in model '{}'", name));
  }
  return load_model_json(doc);
}

Reference LoadedModel::reference(double span, const IntegratorOptions& options) const {
  switch (family) {
    case ModelFamily::SDriven: {
      AnalyticArc a = sdriven_candidate(*sdriven, C, span);
      return {std::move(a.process), std::move(a.arc)};
    }
    case ModelFamily::Ramsey: {
      SaddlePath p = ramsey_saddle_path(*ramsey, span);
      return {std::move(p.process), std::move(p.arc)};
    }
    case ModelFamily::Custom: {
      Process p = integrate_process(system, custom->x_star, 0.0, custom_reference_control(*custom), span, options);
      std::optional<CostateArc> arc;
      if (psi0) arc = integrate_adjoint(system, p, *psi0, 1.0, options);
      return {std::move(p), std::move(arc)};
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family");
}

}  // namespace ihoc
