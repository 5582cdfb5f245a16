#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ihoc/convex_geom.hpp"
#include "ihoc/error.hpp"
#include "support.hpp"

using namespace ihoc;
using ihoc::testing::vec;
using Axis = ConeDescriptor::Axis;

namespace {

PointCloud square() {
  return PointCloud(2, {vec({0, 0}), vec({1, 0}), vec({1, 1}), vec({0, 1}), vec({0.5, 0.5}), vec({0.5, 0.0})});
}

PointCloud circle(int n) {
  PointCloud c(2);
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    c.add(vec({std::sin(a), 1.0 - std::cos(a)}));
  }
  return c;
}

}  // namespace

TEST(Hull, SquareDropsInteriorAndCollinear) {
  const HullApprox h = convex_hull_2d(square());
  ASSERT_EQ(h.vertices2d.size(), 4u);
  EXPECT_TRUE(h.contains2d({0.5, 0.5}));
  EXPECT_TRUE(h.contains2d({1.0, 0.5}));
  EXPECT_FALSE(h.contains2d({1.01, 0.5}));
  // counterclockwise: positive signed area
  double area = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = h.vertices2d[i];
    const auto& b = h.vertices2d[(i + 1) % 4];
    area += a.x() * b.y() - a.y() * b.x();
  }
  EXPECT_NEAR(area / 2.0, 1.0, 1e-14);
}

TEST(Hull, DegenerateClouds) {
  EXPECT_EQ(convex_hull_2d(PointCloud(2, {vec({1, 1}), vec({1, 1})})).vertices2d.size(), 1u);
  EXPECT_EQ(convex_hull_2d(PointCloud(2, {vec({0, 0}), vec({1, 1}), vec({2, 2})})).vertices2d.size(), 2u);
  EXPECT_THROW(convex_hull_2d(PointCloud(3, {vec({0, 0, 0})})), Error);
}

TEST(HullDistance, OutsideAndInside) {
  const HullProjection out = hull_distance(vec({2.0, 0.5}), square());
  EXPECT_NEAR(out.distance, 1.0, 1e-8);
  EXPECT_NEAR(out.point[0], 1.0, 1e-8);
  double wsum = 0.0;
  for (double w : out.weights) {
    EXPECT_GE(w, 0.0);
    wsum += w;
  }
  EXPECT_NEAR(wsum, 1.0, 1e-12);
  EXPECT_LT(hull_distance(vec({0.3, 0.6}), square()).distance, 1e-8);
}

TEST(HullDistance, CircleDistanceMatchesGeometry) {
  const PointCloud c = circle(720);
  // centre (0, 1), radius 1; the point (0, 3) is 1 away
  EXPECT_NEAR(hull_distance(vec({0.0, 3.0}), c).distance, 1.0, 1e-4);
}

TEST(NormalCone, Kinds) {
  EXPECT_EQ(normal_cone(ConstraintSet::whole_space(), vec({1, 2})).kind, ConeDescriptor::Kind::ZeroCone);
  EXPECT_EQ(normal_cone(ConstraintSet::point(vec({1, 2})), vec({1, 2})).kind, ConeDescriptor::Kind::FullSpace);
  const ConeDescriptor half = normal_cone(ConstraintSet::half_line(vec({1.0})), vec({1.0}));
  ASSERT_EQ(half.kind, ConeDescriptor::Kind::CoordinateCone);
  EXPECT_EQ(half.axes[0], Axis::NonPositive);
  EXPECT_EQ(normal_cone(ConstraintSet::half_line(vec({1.0})), vec({2.0})).kind, ConeDescriptor::Kind::ZeroCone);
  const ConeDescriptor corner = normal_cone(ConstraintSet::box(vec({0, 0}), vec({1, 1})), vec({1, 0.5}));
  EXPECT_EQ(corner.axes[0], Axis::NonNegative);
  EXPECT_EQ(corner.axes[1], Axis::Zero);
  EXPECT_THROW(normal_cone(ConstraintSet::half_line(vec({1.0})), vec({0.0})), Error);
}

TEST(Cone, Projection) {
  const ConeDescriptor c = ConeDescriptor::coordinate({Axis::NonPositive, Axis::Free, Axis::Zero, Axis::NonNegative});
  const Vec p = c.project(vec({1.0, -3.0, 2.0, 4.0}));
  EXPECT_EQ(p, vec({0.0, -3.0, 0.0, 4.0}));
  EXPECT_TRUE(ConeDescriptor::full(2).contains(vec({5, -5}), 0.0));
  EXPECT_FALSE(ConeDescriptor::zero(2).contains(vec({1e-3, 0}), 1e-6));
  const ConeDescriptor poly = ConeDescriptor::polyhedral(2, {vec({1, 0}), vec({1, 1})});
  EXPECT_LT((poly.project(vec({2.0, 1.0})) - vec({2.0, 1.0})).norm(), 1e-8);
  EXPECT_NEAR(poly.project(vec({0.0, 1.0})).norm(), std::sqrt(0.5), 1e-8);
}

TEST(Membership, DiskWithZeroCone) {
  const PointCloud c = circle(360);
  const ConeDescriptor zero = ConeDescriptor::zero(2);
  EXPECT_TRUE(cone_plus_hull_membership(vec({0.2, 1.3}), zero, c, 1e-6).member);
  const MembershipResult far = cone_plus_hull_membership(vec({0.0, 2.5}), zero, c, 1e-6);
  EXPECT_FALSE(far.member);
  EXPECT_NEAR(far.gap, 0.5, 1e-4);
}

TEST(Membership, ConeAbsorbsDirection) {
  const PointCloud single(1, {vec({0.0})});
  const ConeDescriptor neg = ConeDescriptor::coordinate({Axis::NonPositive});
  EXPECT_TRUE(cone_plus_hull_membership(vec({-3.0}), neg, single, 1e-9).member);
  const MembershipResult r = cone_plus_hull_membership(vec({0.4}), neg, single, 1e-9);
  EXPECT_FALSE(r.member);
  EXPECT_NEAR(r.gap, 0.4, 1e-9);
}

TEST(Membership, CertificateDecomposes) {
  const PointCloud c = square();
  const ConeDescriptor cone = ConeDescriptor::coordinate({Axis::NonNegative, Axis::Zero});
  const Vec p = vec({3.0, 0.5});
  const MembershipResult r = cone_plus_hull_membership(p, cone, c, 1e-8);
  ASSERT_TRUE(r.member);
  EXPECT_LT((r.cone_element + r.hull_point - p).norm(), 1e-7);
  EXPECT_TRUE(cone.contains(r.cone_element, 1e-12));
}

TEST(MembershipProperty, InvariantUnderInteriorSamples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  const PointCloud base = square();
  PointCloud padded = base;
  std::uniform_real_distribution<double> I(0.05, 0.95);
  for (int k = 0; k < 50; ++k) padded.add(vec({I(rng), I(rng)}));
  for (int k = 0; k < 40; ++k) {
    const Vec p = vec({U(rng) + 0.5, U(rng) + 0.5});
    const auto a = cone_plus_hull_membership(p, ConeDescriptor::zero(2), base, 1e-6);
    const auto b = cone_plus_hull_membership(p, ConeDescriptor::zero(2), padded, 1e-6);
    EXPECT_EQ(a.member, b.member);
    EXPECT_NEAR(a.gap, b.gap, 1e-6);
  }
}

TEST(Membership, Errors) {
  EXPECT_THROW(cone_plus_hull_membership(vec({0.0}), ConeDescriptor::zero(1), PointCloud(1), 1e-6), Error);
  EXPECT_THROW(cone_plus_hull_membership(vec({0.0, 0.0}), ConeDescriptor::zero(1), PointCloud(1, {vec({0})}), 1e-6),
               Error);
}

TEST(GeomJson, HullAndCone) {
  const nlohmann::json j = to_json(convex_hull_2d(square()));
  EXPECT_EQ(j.at("vertices2d").size(), 4u);
  EXPECT_EQ(to_json(ConeDescriptor::zero(2)).at("kind"), "ZeroCone");
}
