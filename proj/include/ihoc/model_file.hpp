#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "ihoc/models.hpp"

namespace ihoc {

enum class ModelFamily { SDriven, Ramsey, Custom };
std::string to_string(ModelFamily family);

/// Candidate process and (when the family provides one) its co-state arc.
struct Reference {
  Process process;
  std::optional<CostateArc> arc;
};

struct LoadedModel {
  ModelFamily family = ModelFamily::Custom;
  std::string name;
  std::string digest;  // FNV-1a 64 of the file bytes, hex
  nlohmann::json source;
  ControlSystem system;
  Vec x_star;

  std::optional<SDrivenModel> sdriven;
  Vec C;  // candidate parameter of S-driven models
  std::optional<RamseyModel> ramsey;
  std::optional<CustomModel> custom;
  std::optional<Row> psi0;  // optional co-state initial value from the file

  /// Reference process on [0, span].
  Reference reference(double span, const IntegratorOptions& options = {}) const;
};

/// Parses a model document. Throws ConfigError naming the offending key,
/// SyntaxError / UnknownIdentifier for bad expressions.
LoadedModel load_model_json(const nlohmann::json& doc, const std::string& digest = {});
LoadedModel load_model_text(const std::string& text);
LoadedModel load_model_file(const std::string& path);

/// Built-in presets: "planar", "oscillator", "ramsey", "stable-linear".
LoadedModel builtin_model(const std::string& name);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace ihoc
