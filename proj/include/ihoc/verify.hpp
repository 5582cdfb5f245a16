#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace ihoc {

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckLine> checks;
  nlohmann::json data;  // key numbers of the run
  bool pass() const;
};

/// Built-in regression suites: "planar", "oscillator", "ramsey".
/// Throws ConfigError for an unknown name.
SuiteResult run_suite(const std::string& name);

std::vector<std::string> suite_names();

}  // namespace ihoc
