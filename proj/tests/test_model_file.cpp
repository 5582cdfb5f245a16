#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "ihoc/error.hpp"
#include "ihoc/model_file.hpp"
#include "support.hpp"

using namespace ihoc;
using ihoc::testing::vec;

namespace {

std::string message_of(const std::string& text, ErrorKind expected = ErrorKind::ConfigError) {
  try {
    load_model_text(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), expected) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "no exception for " << text;
  return {};
}

bool mentions(const std::string& msg, const std::string& key) { return msg.find(key) != std::string::npos; }

}  // namespace

TEST(ModelFile, SDrivenDocument) {
  const LoadedModel m = load_model_text(R"J({"family": "sdriven", "name": "p", "m": 2,
      "S": "x1*sin(t) - x2*cos(t)", "C": [0.1, 0.2], "psi0": [0.1, -0.8]})J");
  EXPECT_EQ(m.family, ModelFamily::SDriven);
  EXPECT_EQ(m.name, "p");
  EXPECT_EQ(m.x_star, Vec::Zero(2));
  EXPECT_EQ(m.C, vec({0.1, 0.2}));
  ASSERT_TRUE(m.psi0.has_value());
  EXPECT_DOUBLE_EQ((*m.psi0)[1], -0.8);
  const Reference r = m.reference(3.0);
  EXPECT_NEAR(r.process.state_at(3.0)[0], 0.1 * (1 - std::exp(-6.0)), 1e-12);
  ASSERT_TRUE(r.arc.has_value());
}

TEST(ModelFile, RamseyDocument) {
  const LoadedModel m =
      load_model_text(R"J({"family": "ramsey", "f": "sqrt(x1)", "f0": "-ln(u1)", "rho": 0.25, "x_star": 1})J");
  EXPECT_EQ(m.name, "ramsey");
  ASSERT_TRUE(m.ramsey.has_value());
  EXPECT_EQ(to_string(m.family), "ramsey");
  EXPECT_EQ(m.system.c_as.kind, ConstraintSet::Kind::HalfLine);
}

TEST(ModelFile, CustomDocument) {
  const LoadedModel m = load_model_text(R"J({
    "family": "custom", "name": "box", "m": 1, "k": 1,
    "f": ["-x1 + u1"], "f0": "x1^2 + u1^2", "l": "3*x1",
    "x_star": [2], "u_ref": ["exp(-t)"],
    "control_set": {"kind": "box", "lower": [-1], "upper": ["inf"]},
    "c0": {"kind": "whole"},
    "c_as": {"kind": "half_line", "lower": [0]}})J");
  ASSERT_TRUE(m.custom.has_value());
  EXPECT_TRUE(std::isinf(m.custom->control_set.upper[0]));
  EXPECT_DOUBLE_EQ(m.system.eval_l(vec({2.0})), 6.0);
  EXPECT_DOUBLE_EQ(m.system.eval_grad_l(vec({2.0}))[0], 3.0);
  const Reference r = m.reference(2.0);
  // y' = -y + e^{-t}, y(0) = 2: y = (2 + t) e^{-t}
  EXPECT_NEAR(r.process.state_at(2.0)[0], 4.0 * std::exp(-2.0), 1e-8);
  EXPECT_FALSE(r.arc.has_value());
}

TEST(ModelFile, ErrorsNameTheKey) {
  EXPECT_TRUE(mentions(message_of(R"J({"name": "x"})J"), "'family'"));
  EXPECT_TRUE(mentions(message_of(R"J({"family": "other"})J"), "other"));
  EXPECT_TRUE(mentions(message_of(R"J({"family": "ramsey", "f": "sqrt(x1)", "f0": "-ln(u1)", "rho": "a", "x_star": 1})J"),
                       "'rho'"));
  EXPECT_TRUE(mentions(message_of(R"J({"family": "sdriven", "m": 1.5, "S": "x1"})J"), "'m'"));
  EXPECT_TRUE(mentions(message_of(R"J({"family": "sdriven", "m": 2, "S": "x1", "x_star": [1]})J"), "'x_star'"));
  EXPECT_TRUE(mentions(message_of(R"J({"family": "sdriven", "m": 1, "S": "x1 +"})J", ErrorKind::SyntaxError), "'S'"));
  EXPECT_TRUE(
      mentions(message_of(R"J({"family": "sdriven", "m": 1, "S": "foo(x1)"})J", ErrorKind::UnknownIdentifier), "'S'"));
  EXPECT_TRUE(mentions(message_of(R"J({"family": "custom", "m": 1, "k": 1, "f": ["x1"], "f0": "x1",
      "x_star": [0], "u_ref": ["0"], "c_as": {"kind": "ring"}})J"), "ring"));
  // f grows without bound: the concavity probe fails
  EXPECT_TRUE(mentions(message_of(R"J({"family": "ramsey", "f": "x1^2", "f0": "-ln(u1)", "rho": 0.25, "x_star": 1})J"),
                       "ramsey"));
}

TEST(ModelFile, CorruptJsonReportsByte) {
  const std::string msg = message_of(R"J({"family": "sdriven", "m": )J");
  EXPECT_TRUE(mentions(msg, "not valid JSON"));
  EXPECT_TRUE(mentions(msg, "byte"));
}

TEST(ModelFile, DigestTracksBytes) {
  const std::string a = R"J({"family": "sdriven", "m": 1, "S": "x1"})J";
  const std::string b = R"J({"family": "sdriven", "m": 1,  "S": "x1"})J";
  EXPECT_EQ(load_model_text(a).digest, load_model_text(a).digest);
  EXPECT_NE(load_model_text(a).digest, load_model_text(b).digest);
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(ModelFile, FileRoundTrip) {
  const std::string path = ::testing::TempDir() + "ihoc_model.json";
  {
    std::ofstream out(path);
    out << R"J({"family": "sdriven", "name": "osc", "m": 1, "S": "exp(-t)*sin(exp(t)*x1) - exp(-x1^2)"})J";
  }
  EXPECT_EQ(load_model_file(path).name, "osc");
  EXPECT_TRUE(mentions([&] {
    try {
      load_model_file(path + ".missing");
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  }(), "cannot open"));
}

TEST(ModelFile, Builtins) {
  for (const char* name : {"planar", "oscillator", "ramsey", "stable-linear"}) {
    const LoadedModel m = builtin_model(name);
    EXPECT_EQ(m.name, name);
  }
  EXPECT_EQ(builtin_model("planar").system.state_dim, 2);
  EXPECT_THROW(builtin_model("nope"), Error);
}

TEST(ModelFile, SampleModelsLoad) {
  int loaded = 0;
  for (const auto& entry : std::filesystem::directory_iterator(std::string(IHOC_SOURCE_DIR) + "/models")) {
    if (entry.path().extension() != ".json") continue;
    const LoadedModel m = load_model_file(entry.path().string());
    EXPECT_FALSE(m.digest.empty()) << entry.path();
    EXPECT_NO_THROW(m.reference(2.0)) << entry.path();
    ++loaded;
  }
  EXPECT_GE(loaded, 4);
}
