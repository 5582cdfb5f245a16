#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "ihoc/model_file.hpp"
#include "ihoc/transversality.hpp"

namespace ihoc {

inline constexpr const char* kReportSchema = "ihoc-report/1";

struct ReportHeader {
  std::string command;
  std::string model_path;
  const LoadedModel* model = nullptr;
  nlohmann::json config;  // resolved flags
  std::uint64_t seed = 0;
  nlohmann::json schedule;  // null when the command has none
  nlohmann::json tolerances;
  bool timestamp = false;
};

/// {schema, command, model{path,name,family,digest}, config, seed, schedule,
/// tolerances, results[, timestamp]}.
nlohmann::json make_report(const ReportHeader& header, nlohmann::json results);

/// Indented JSON; floating-point numbers in 17-significant-digit scientific
/// notation, non-finite numbers as null.
std::string dump_json(const nlohmann::json& doc);

/// Writes indented JSON with a trailing newline. Throws ConfigError when the
/// file cannot be written.
void write_json_file(const std::string& path, const nlohmann::json& doc);

/// theta, g_1..g_m[, psiA] rows of the partial-integral sequence.
void write_partials_csv(std::ostream& out, const AkResult& ak, const std::vector<double>& psiA = {});

}  // namespace ihoc
