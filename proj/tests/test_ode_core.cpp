#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ihoc/error.hpp"
#include "ihoc/ode_core.hpp"
#include "support.hpp"

using namespace ihoc;
using ihoc::testing::vec;

namespace {

ControlSystem scalar_linear(double a) {
  ControlSystem s;
  s.f = [a](double, const Vec& x, const Vec& u) { return Vec(a * x + u); };
  s.f0 = [](double, const Vec& x, const Vec& u) { return x.squaredNorm() + u.squaredNorm(); };
  s.fx = [a](double, const Vec&, const Vec&) { return Mat::Constant(1, 1, a); };
  s.f0x = [](double, const Vec& x, const Vec&) { return Row(2.0 * x.transpose()); };
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(TimeGrid, RejectsNonIncreasing) {
  EXPECT_EQ(kind_of([] { TimeGrid({0.0, 1.0, 1.0}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { TimeGrid({0.0}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(TimeGrid::uniform(0.0, 1.0, 4).size(), 5u);
  EXPECT_DOUBLE_EQ(TimeGrid::uniform(0.0, 1.0, 4).back(), 1.0);
}

TEST(ControlSet, Membership) {
  const ControlSet box = ControlSet::box(vec({0.0}), vec({1.0}));
  EXPECT_TRUE(box.contains(vec({0.5})));
  EXPECT_FALSE(box.contains(vec({1.5})));
  const ControlSet fin = ControlSet::finite({vec({-1.0}), vec({1.0})});
  EXPECT_TRUE(fin.contains(vec({1.0})));
  EXPECT_FALSE(fin.contains(vec({0.0})));
  EXPECT_TRUE(ControlSet::whole_space().contains(vec({1e9})));
}

TEST(ConstraintSet, Membership) {
  const ConstraintSet half = ConstraintSet::half_line(vec({1.0}));
  EXPECT_TRUE(half.contains(vec({1.0})));
  EXPECT_TRUE(half.contains(vec({3.0})));
  EXPECT_FALSE(half.contains(vec({0.5})));
  EXPECT_TRUE(ConstraintSet::point(vec({1.0, 2.0})).contains(vec({1.0, 2.0})));
  EXPECT_FALSE(ConstraintSet::point(vec({1.0, 2.0})).contains(vec({1.0, 2.1})));
}

TEST(ControlSignal, PiecewiseConstantIsRightContinuous) {
  const ControlSignal u = ControlSignal::piecewise_constant(TimeGrid({0.0, 1.0, 2.0}), {vec({3.0}), vec({-1.0})});
  EXPECT_DOUBLE_EQ(u(0.5)[0], 3.0);
  EXPECT_DOUBLE_EQ(u(1.0)[0], -1.0);
  EXPECT_DOUBLE_EQ(u(2.0)[0], -1.0);
  ASSERT_EQ(u.breakpoints().size(), 1u);
  EXPECT_EQ(kind_of([] { ControlSignal::piecewise_constant(TimeGrid({0.0, 1.0}), {vec({1.0}), vec({2.0})}); }),
            ErrorKind::DimensionMismatch);
}

TEST(Process, LinearScalarAgainstClosedForm) {
  const ControlSystem s = scalar_linear(-1.0);
  const Process p = integrate_process(s, vec({2.0}), 0.0, ControlSignal::constant(vec({0.0})), 3.0);
  EXPECT_NEAR(p.state_at(3.0)[0], 2.0 * std::exp(-3.0), 1e-9);
  // w = int 4 e^{-2t} = 2 (1 - e^{-2 theta})
  EXPECT_NEAR(eval_cost(p, 3.0), 2.0 * (1.0 - std::exp(-6.0)), 1e-9);
  EXPECT_NEAR(p.cost_at(1.0), 2.0 * (1.0 - std::exp(-2.0)), 1e-9);
}

TEST(Process, ZeroDynamicsKeepsConstantColumns) {
  ControlSystem s;
  s.state_dim = 2;
  s.f = [](double, const Vec&, const Vec&) { return Vec(Vec::Zero(2)); };
  s.f0 = [](double, const Vec&, const Vec&) { return 0.0; };
  const Process p = integrate_process(s, vec({1.5, -2.0}), 0.0, ControlSignal::constant(vec({0.0})), 4.0);
  std::ostringstream csv;
  write_process_csv(csv, p);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,y_1,y_2,w");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_NE(line.find(",1.5000000000000000e+00,-2.0000000000000000e+00,0.0000000000000000e+00"), std::string::npos)
        << line;
  }
  EXPECT_GE(rows, 2);
}

TEST(Process, PiecewiseControlIntegratesExactly) {
  ControlSystem s;
  s.f = [](double, const Vec&, const Vec& u) { return Vec(u); };
  s.f0 = [](double, const Vec&, const Vec& u) { return u[0]; };
  const ControlSignal u = ControlSignal::piecewise_constant(TimeGrid({0.0, 0.5, 2.0}), {vec({2.0}), vec({-1.0})});
  const Process p = integrate_process(s, vec({0.0}), 0.0, u, 2.0);
  EXPECT_NEAR(p.state_at(0.5)[0], 1.0, 1e-12);
  EXPECT_NEAR(p.state_at(2.0)[0], -0.5, 1e-12);
  EXPECT_NEAR(p.cost_at(2.0), -0.5, 1e-12);
}

TEST(Process, ControlOutsideSetIsRejected) {
  ControlSystem s = scalar_linear(0.0);
  s.control_set = ControlSet::box(vec({0.0}), vec({1.0}));
  EXPECT_EQ(kind_of([&] { integrate_process(s, vec({0.0}), 0.0, ControlSignal::constant(vec({2.0})), 1.0); }),
            ErrorKind::ControlOutOfSet);
}

TEST(Process, CostOutsideSpan) {
  const Process p = integrate_process(scalar_linear(-1.0), vec({1.0}), 0.0, ControlSignal::constant(vec({0.0})), 1.0);
  EXPECT_EQ(kind_of([&] { (void)eval_cost(p, 2.0); }), ErrorKind::OutOfRange);
}

TEST(Hamiltonian, Definition) {
  const ControlSystem s = scalar_linear(2.0);
  // psi f - lambda f0 = 3 (2*1 + 0.5) - 1 (1 + 0.25)
  EXPECT_DOUBLE_EQ(hamiltonian(s, vec({1.0}), Row::Constant(1, 3.0), vec({0.5}), 1.0, 0.0), 7.5 - 1.25);
  EXPECT_DOUBLE_EQ(hamiltonian(s, vec({1.0}), Row::Constant(1, 3.0), vec({0.5}), 0.0, 0.0), 7.5);
}

TEST(ControlSystem, JacobianFallbackMatchesAnalytic) {
  ControlSystem with = scalar_linear(-0.7);
  ControlSystem without = with;
  without.fx = nullptr;
  without.f0x = nullptr;
  const Vec x = vec({1.3}), u = vec({0.2});
  EXPECT_NEAR(without.eval_fx(0.0, x, u)(0, 0), -0.7, 1e-7);
  EXPECT_NEAR(without.eval_f0x(0.0, x, u)[0], 2.6, 1e-6);
  const std::vector<std::tuple<double, Vec, Vec>> probes{{0.0, x, u}, {1.0, vec({-0.4}), vec({1.0})}};
  EXPECT_LT(jacobian_consistency(with, probes), 1e-6);
}

TEST(ControlSystem, ValidateCatchesMissingDynamics) {
  ControlSystem s;
  EXPECT_THROW(s.validate(), Error);
}
