#pragma once

#include <vector>

#include "json.hpp"

#include "ihoc/ode_core.hpp"
#include "ihoc/types.hpp"

namespace ihoc {

/// Finite sample of points in R^dim.
class PointCloud {
 public:
  explicit PointCloud(Eigen::Index dim, std::vector<Vec> points = {});

  Eigen::Index dim() const { return dim_; }
  const std::vector<Vec>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  void add(Vec p);

 private:
  Eigen::Index dim_;
  std::vector<Vec> points_;
};

/// Convex hull of a generator cloud; for dim = 2 the extreme points are listed
/// counterclockwise.
struct HullApprox {
  Eigen::Index dim = 0;
  PointCloud generators{1};
  std::vector<Eigen::Vector2d> vertices2d;

  /// Exact point-in-polygon test on vertices2d (boundary counts as inside).
  bool contains2d(const Eigen::Vector2d& p, double tol = 1e-12) const;
};

/// Normal-cone descriptor with closed-form projection.
struct ConeDescriptor {
  enum class Kind { ZeroCone, FullSpace, CoordinateCone, Polyhedral };
  enum class Axis { Free, NonNegative, NonPositive, Zero };

  Kind kind = Kind::ZeroCone;
  Eigen::Index dim = 0;
  std::vector<Axis> axes;  // CoordinateCone
  std::vector<Vec> rays;   // Polyhedral generators

  static ConeDescriptor zero(Eigen::Index dim);
  static ConeDescriptor full(Eigen::Index dim);
  static ConeDescriptor coordinate(std::vector<Axis> axes);
  static ConeDescriptor polyhedral(Eigen::Index dim, std::vector<Vec> rays);

  Vec project(const Vec& p) const;
  bool contains(const Vec& p, double tol) const { return (project(p) - p).norm() <= tol; }
};

/// Andrew monotone chain; duplicates within 1e-12 merged, collinear points
/// dropped. Throws DimensionMismatch unless dim = 2.
HullApprox convex_hull_2d(const PointCloud& cloud);

struct HullProjection {
  double distance = 0.0;
  Vec point;                 // nearest point of co(cloud)
  std::vector<double> weights;  // convex weights, one per generator
  double gap = 0.0;          // final Frank-Wolfe duality gap
  int iterations = 0;
};

/// Distance from p to co(cloud) by Frank-Wolfe with away steps, stopped when
/// the duality gap drops below tol^2 (floored at the rounding level of the
/// data). Throws NoConvergence.
HullProjection hull_distance(const Vec& p, const PointCloud& cloud, double tol = 1e-9,
                             int max_iterations = 200000);

/// Normal cone of an analytic constraint set at x. Throws PointNotInSet.
ConeDescriptor normal_cone(const ConstraintSet& set, const Vec& x, double tol = 1e-9);

struct MembershipResult {
  bool member = false;
  double gap = 0.0;             // || p - nu - q || at termination
  Vec cone_element;             // nu
  Vec hull_point;               // q
  std::vector<double> weights;  // q as convex weights of the generators
  std::vector<double> gap_history;
  int iterations = 0;
};

/// Decides whether p in cone + co(cloud) up to tol by alternating projections.
/// Throws NoConvergence when the iteration cap is hit while still improving.
MembershipResult cone_plus_hull_membership(const Vec& p, const ConeDescriptor& cone,
                                           const PointCloud& cloud, double tol,
                                           int max_iterations = 10000);

nlohmann::json to_json(const HullApprox& hull);
nlohmann::json to_json(const ConeDescriptor& cone);
nlohmann::json to_json(const MembershipResult& result);

}  // namespace ihoc
