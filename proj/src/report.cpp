#include "ihoc/report.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ihoc/error.hpp"

namespace ihoc {

nlohmann::json make_report(const ReportHeader& header, nlohmann::json results) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["command"] = header.command;
  nlohmann::json model;
  model["path"] = header.model_path;
  if (header.model) {
    model["name"] = header.model->name;
    model["family"] = to_string(header.model->family);
    model["digest"] = header.model->digest;
  }
  j["model"] = std::move(model);
  j["config"] = header.config;
  j["seed"] = header.seed;
  j["schedule"] = header.schedule;
  j["tolerances"] = header.tolerances;
  j["results"] = std::move(results);
  if (header.timestamp) {
    const auto now = std::chrono::system_clock::now();
    j["timestamp"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
  }
  return j;
}

namespace {

void dump_value(std::string& out, const nlohmann::json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(it.key()).dump() + ": ";
        dump_value(out, it.value(), depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_value(out, j[i], depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt::format("{:.16e}", v) : std::string("null");
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& doc) {
  std::string out;
  dump_value(out, doc, 0);
  out += '\n';
  return out;
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ConfigError, fmt::format("cannot write '{}'", path));
  out << dump_json(doc);
  if (!out) throw Error(ErrorKind::ConfigError, fmt::format("write to '{}' failed", path));
}

void write_partials_csv(std::ostream& out, const AkResult& ak, const std::vector<double>& psiA) {
  const Eigen::Index m = ak.partials.empty() ? 0 : ak.partials.front().size();
  out << "theta";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",g_" << i;
  if (!psiA.empty()) out << ",psiA";
  out << '\n';
  for (std::size_t k = 0; k < ak.thetas.size(); ++k) {
    fmt::print(out, "{:.16e}", ak.thetas[k]);
    for (Eigen::Index i = 0; i < m; ++i) fmt::print(out, ",{:.16e}", ak.partials[k][i]);
    if (k < psiA.size()) fmt::print(out, ",{:.16e}", psiA[k]);
    out << '\n';
  }
}

}  // namespace ihoc
