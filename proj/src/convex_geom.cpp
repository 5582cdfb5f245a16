#include "ihoc/convex_geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ihoc/error.hpp"

namespace ihoc {

PointCloud::PointCloud(Eigen::Index dim, std::vector<Vec> points) : dim_(dim), points_() {
  if (dim_ < 1) throw Error(ErrorKind::InvalidArgument, "point cloud dimension must be >= 1");
  points_.reserve(points.size());
  for (Vec& p : points) add(std::move(p));
}

void PointCloud::add(Vec p) {
  if (p.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "point has wrong dimension");
  if (!p.allFinite()) throw Error(ErrorKind::NonFinite, "point cloud entry is not finite");
  points_.push_back(std::move(p));
}

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace

bool HullApprox::contains2d(const Eigen::Vector2d& p, double tol) const {
  const std::size_t n = vertices2d.size();
  if (n == 0) return false;
  if (n == 1) return (p - vertices2d[0]).norm() <= tol;
  if (n == 2) return segment_distance(p, vertices2d[0], vertices2d[1]) <= tol;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = vertices2d[i];
    const auto& b = vertices2d[(i + 1) % n];
    if (cross(a, b, p) < -tol * (b - a).norm()) return false;
  }
  return true;
}

ConeDescriptor ConeDescriptor::zero(Eigen::Index dim) {
  ConeDescriptor c;
  c.kind = Kind::ZeroCone;
  c.dim = dim;
  return c;
}

ConeDescriptor ConeDescriptor::full(Eigen::Index dim) {
  ConeDescriptor c;
  c.kind = Kind::FullSpace;
  c.dim = dim;
  return c;
}

ConeDescriptor ConeDescriptor::coordinate(std::vector<Axis> axes) {
  ConeDescriptor c;
  c.kind = Kind::CoordinateCone;
  c.dim = static_cast<Eigen::Index>(axes.size());
  c.axes = std::move(axes);
  return c;
}

ConeDescriptor ConeDescriptor::polyhedral(Eigen::Index dim, std::vector<Vec> rays) {
  for (const Vec& r : rays) {
    if (r.size() != dim) throw Error(ErrorKind::DimensionMismatch, "cone ray has wrong dimension");
  }
  ConeDescriptor c;
  c.kind = Kind::Polyhedral;
  c.dim = dim;
  c.rays = std::move(rays);
  return c;
}

namespace {

// Lawson-Hanson non-negative least squares: min ||R c - p|| subject to c >= 0.
Vec nnls(const Mat& R, const Vec& p) {
  const Eigen::Index n = R.cols();
  Vec c = Vec::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, R.cwiseAbs().maxCoeff() * std::max(1.0, p.norm()));
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const Vec w = R.transpose() * (p - R * c);
    Eigen::Index j = -1;
    double best = tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && w[i] > best) {
        best = w[i];
        j = i;
      }
    }
    if (j < 0) break;
    passive[static_cast<std::size_t>(j)] = true;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
      }
      Mat Rp(R.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) Rp.col(static_cast<Eigen::Index>(k)) = R.col(idx[k]);
      const Vec sp = Rp.completeOrthogonalDecomposition().solve(p);
      Vec s = Vec::Zero(n);
      for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[static_cast<Eigen::Index>(k)];
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index i : idx) {
        if (s[i] <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, c[i] / (c[i] - s[i]));
        }
      }
      if (feasible) {
        c = s;
        break;
      }
      c += alpha * (s - c);
      for (Eigen::Index i : idx) {
        if (c[i] <= 1e-15) {
          c[i] = 0.0;
          passive[static_cast<std::size_t>(i)] = false;
        }
      }
    }
  }
  return c;
}

}  // namespace

Vec ConeDescriptor::project(const Vec& p) const {
  if (p.size() != dim) throw Error(ErrorKind::DimensionMismatch, "cone projection: wrong dimension");
  switch (kind) {
    case Kind::ZeroCone:
      return Vec::Zero(dim);
    case Kind::FullSpace:
      return p;
    case Kind::CoordinateCone: {
      Vec out(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        switch (axes[static_cast<std::size_t>(i)]) {
          case Axis::Free: out[i] = p[i]; break;
          case Axis::NonNegative: out[i] = std::max(p[i], 0.0); break;
          case Axis::NonPositive: out[i] = std::min(p[i], 0.0); break;
          case Axis::Zero: out[i] = 0.0; break;
        }
      }
      return out;
    }
    case Kind::Polyhedral: {
      if (rays.empty()) return Vec::Zero(dim);
      Mat R(dim, static_cast<Eigen::Index>(rays.size()));
      for (std::size_t k = 0; k < rays.size(); ++k) R.col(static_cast<Eigen::Index>(k)) = rays[k];
      return R * nnls(R, p);
    }
  }
  return Vec::Zero(dim);
}

HullApprox convex_hull_2d(const PointCloud& cloud) {
  if (cloud.dim() != 2) {
    throw Error(ErrorKind::DimensionMismatch, "convex_hull_2d needs a two-dimensional cloud");
  }
  if (cloud.empty()) throw Error(ErrorKind::InvalidArgument, "convex_hull_2d needs at least one point");
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(cloud.size());
  for (const Vec& p : cloud.points()) pts.emplace_back(p[0], p[1]);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  constexpr double kDup = 1e-12;
  std::vector<Eigen::Vector2d> unique;
  for (const auto& p : pts) {
    const bool dup = std::any_of(unique.rbegin(), unique.rend(), [&](const Eigen::Vector2d& q) {
      return (p - q).lpNorm<Eigen::Infinity>() <= kDup;
    });
    if (!dup) unique.push_back(p);
  }

  HullApprox hull;
  hull.dim = 2;
  hull.generators = cloud;
  if (unique.size() <= 2) {
    hull.vertices2d = unique;
    return hull;
  }
  std::vector<Eigen::Vector2d> h(2 * unique.size());
  std::size_t k = 0;
  for (const auto& p : unique) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0.0) --k;
    h[k++] = p;
  }
  for (std::size_t i = unique.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = unique[i];
    while (k >= lower && cross(h[k - 2], h[k - 1], p) <= 0.0) --k;
    h[k++] = p;
  }
  h.resize(k - 1);
  hull.vertices2d = std::move(h);
  return hull;
}

HullProjection hull_distance(const Vec& p, const PointCloud& cloud, double tol, int max_iterations) {
  if (cloud.empty()) throw Error(ErrorKind::InvalidArgument, "hull_distance needs a nonempty cloud");
  if (p.size() != cloud.dim()) throw Error(ErrorKind::DimensionMismatch, "hull_distance: wrong dimension");
  const auto& X = cloud.points();
  const std::size_t n = X.size();

  double scale = p.squaredNorm();
  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    scale = std::max(scale, X[i].squaredNorm());
    const double d = (X[i] - p).squaredNorm();
    if (d < best) {
      best = d;
      start = i;
    }
  }
  const double threshold =
      std::max(tol * tol, 64.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0));

  std::vector<double> w(n, 0.0);
  w[start] = 1.0;
  Vec q = X[start];
  std::vector<double> grads(n);
  HullProjection out;
  for (int it = 0;; ++it) {
    if (it > 0 && it % 64 == 0) {
      q.setZero();
      for (std::size_t i = 0; i < n; ++i) {
        if (w[i] > 0.0) q += w[i] * X[i];
      }
    }
    const Vec r = q - p;
    const double rq = r.dot(q);
    std::size_t s = 0;
    std::size_t v = n;
    for (std::size_t i = 0; i < n; ++i) {
      grads[i] = r.dot(X[i]);
      if (grads[i] < grads[s]) s = i;
      if (w[i] > 0.0 && (v == n || grads[i] > grads[v])) v = i;
    }
    const double fw_gap = rq - grads[s];
    out.gap = fw_gap;
    out.iterations = it;
    if (fw_gap <= threshold) break;
    if (it >= max_iterations) {
      throw Error(ErrorKind::NoConvergence,
                  fmt::format("hull_distance: duality gap {:.3g} after {} iterations", fw_gap, it));
    }
    const double away_gap = grads[v] - rq;
    Vec d;
    double gmax;
    const bool fw_step = fw_gap >= away_gap || w[v] >= 1.0;
    if (fw_step) {
      d = X[s] - q;
      gmax = 1.0;
    } else {
      d = q - X[v];
      gmax = w[v] / (1.0 - w[v]);
    }
    const double dd = d.squaredNorm();
    if (dd == 0.0) break;
    const double gamma = std::clamp(-r.dot(d) / dd, 0.0, gmax);
    if (fw_step) {
      for (double& wi : w) wi *= (1.0 - gamma);
      w[s] += gamma;
    } else {
      for (double& wi : w) wi *= (1.0 + gamma);
      w[v] -= gamma;
      if (gamma == gmax) w[v] = 0.0;
    }
    q += gamma * d;
  }
  q.setZero();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] /= total;
    q += w[i] * X[i];
  }
  out.point = q;
  out.weights = std::move(w);
  out.distance = (p - q).norm();
  return out;
}

ConeDescriptor normal_cone(const ConstraintSet& set, const Vec& x, double tol) {
  if (!set.contains(x, tol)) {
    throw Error(ErrorKind::PointNotInSet, "normal_cone: point does not lie in the set");
  }
  const Eigen::Index m = x.size();
  switch (set.kind) {
    case ConstraintSet::Kind::WholeSpace:
      return ConeDescriptor::zero(m);
    case ConstraintSet::Kind::Point:
      return ConeDescriptor::full(m);
    case ConstraintSet::Kind::HalfLine:
    case ConstraintSet::Kind::Box: {
      using Axis = ConeDescriptor::Axis;
      std::vector<Axis> axes(static_cast<std::size_t>(m), Axis::Zero);
      bool all_zero = true, all_free = true;
      for (Eigen::Index i = 0; i < m; ++i) {
        Axis a = Axis::Zero;
        if (set.lower[i] == set.upper[i]) a = Axis::Free;
        else if (std::abs(x[i] - set.lower[i]) <= tol) a = Axis::NonPositive;
        else if (std::abs(x[i] - set.upper[i]) <= tol) a = Axis::NonNegative;
        axes[static_cast<std::size_t>(i)] = a;
        all_zero = all_zero && a == Axis::Zero;
        all_free = all_free && a == Axis::Free;
      }
      if (all_zero) return ConeDescriptor::zero(m);
      if (all_free) return ConeDescriptor::full(m);
      return ConeDescriptor::coordinate(std::move(axes));
    }
  }
  return ConeDescriptor::zero(m);
}

MembershipResult cone_plus_hull_membership(const Vec& p, const ConeDescriptor& cone,
                                           const PointCloud& cloud, double tol, int max_iterations) {
  if (cloud.empty()) throw Error(ErrorKind::InvalidArgument, "membership needs a nonempty cloud");
  if (cone.dim != p.size() || cloud.dim() != p.size()) {
    throw Error(ErrorKind::DimensionMismatch, "membership: dimensions disagree");
  }
  constexpr double kInnerTol = 1e-9;
  MembershipResult out;
  Vec nu = Vec::Zero(p.size());
  HullProjection proj = hull_distance(p, cloud, kInnerTol);
  double gap = proj.distance;
  out.gap_history.push_back(gap);
  for (int it = 1; gap > tol; ++it) {
    if (it > max_iterations) {
      throw Error(ErrorKind::NoConvergence,
                  fmt::format("alternating projection: gap {:.3g} after {} iterations", gap, it - 1));
    }
    const Vec nu_next = cone.project(p - proj.point);
    HullProjection next = hull_distance(p - nu_next, cloud, kInnerTol);
    const double next_gap = (p - nu_next - next.point).norm();
    out.iterations = it;
    if (next_gap > gap) {
      // Inexact inner projection; keep the better iterate.
      break;
    }
    out.gap_history.push_back(next_gap);
    const bool stalled = gap - next_gap <= 1e-12 * std::max(1.0, gap);
    nu = nu_next;
    proj = std::move(next);
    gap = next_gap;
    if (stalled) break;
  }
  out.member = gap <= tol;
  out.gap = gap;
  out.cone_element = nu;
  out.hull_point = proj.point;
  out.weights = proj.weights;
  return out;
}

nlohmann::json to_json(const HullApprox& hull) {
  nlohmann::json j;
  j["dim"] = hull.dim;
  auto& gens = j["generators"] = nlohmann::json::array();
  for (const Vec& p : hull.generators.points()) gens.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  auto& verts = j["vertices2d"] = nlohmann::json::array();
  for (const auto& v : hull.vertices2d) verts.push_back({v.x(), v.y()});
  return j;
}

nlohmann::json to_json(const ConeDescriptor& cone) {
  static constexpr const char* kKinds[] = {"ZeroCone", "FullSpace", "CoordinateCone", "Polyhedral"};
  static constexpr const char* kAxes[] = {"free", ">=0", "<=0", "=0"};
  nlohmann::json j;
  j["kind"] = kKinds[static_cast<int>(cone.kind)];
  j["dim"] = cone.dim;
  if (cone.kind == ConeDescriptor::Kind::CoordinateCone) {
    auto& axes = j["axes"] = nlohmann::json::array();
    for (auto a : cone.axes) axes.push_back(kAxes[static_cast<int>(a)]);
  }
  if (cone.kind == ConeDescriptor::Kind::Polyhedral) {
    auto& rays = j["rays"] = nlohmann::json::array();
    for (const Vec& r : cone.rays) rays.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  }
  return j;
}

nlohmann::json to_json(const MembershipResult& result) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["member"] = result.member;
  j["gap"] = result.gap;
  j["iterations"] = result.iterations;
  j["cone_element"] = vec(result.cone_element);
  j["hull_point"] = vec(result.hull_point);
  j["weights"] = result.weights;
  return j;
}

}  // namespace ihoc
