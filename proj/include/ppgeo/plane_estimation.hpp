#pragma once

// Reference-plane machinery: back-projection of depth maps, RANSAC plane
// extraction, mean-plane aggregation and point-to-plane ICP.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ppgeo/core_geometry.hpp"
#include "ppgeo/grid.hpp"

namespace ppgeo {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit normal per point

  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct RansacConfig {
  int iterations = 500;
  double inlier_threshold = 0.05;
  double min_inlier_fraction = 0.3;
  std::uint64_t rng_seed = 0;

  void validate() const {
    require(iterations >= 1, ErrorCode::kInvalidArgument, "ransac iterations must be >= 1");
    require(inlier_threshold > 0.0, ErrorCode::kInvalidArgument,
            "ransac inlier threshold must be positive");
    require(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0,
            ErrorCode::kInvalidArgument, "min inlier fraction must lie in [0, 1]");
  }
};

/// P = z K^-1 (u, v, 1) for every valid pixel, in row-major pixel order.
inline PointCloud backproject_depth(const ScalarGrid& depth, const CameraIntrinsics& K) {
  PointCloud cloud;
  cloud.points.reserve(depth.mask().count());
  for_each_pixel(depth.width(), depth.height(), [&](int x, int y) {
    if (!depth.valid(x, y)) return;
    const double z = depth(x, y);
    require(z > 0.0 && std::isfinite(z), ErrorCode::kNonPositiveDepth,
            "valid depth pixels must be positive");
    cloud.points.push_back(z * K.ray({static_cast<double>(x), static_cast<double>(y)}));
  });
  return cloud;
}

/// Back-projects and attaches normals from the cross product of neighbouring
/// pixel points. Pixels without two valid neighbours are dropped.
inline PointCloud backproject_depth_with_normals(const ScalarGrid& depth, const CameraIntrinsics& K) {
  const int w = depth.width();
  const int h = depth.height();
  auto point = [&](int x, int y) {
    return Vec3(depth(x, y) * K.ray({static_cast<double>(x), static_cast<double>(y)}));
  };
  PointCloud cloud;
  for_each_pixel(w, h, [&](int x, int y) {
    if (!depth.valid(x, y)) return;
    const int xn = x + 1 < w ? x + 1 : x - 1;
    const int yn = y + 1 < h ? y + 1 : y - 1;
    if (xn < 0 || yn < 0 || !depth.valid(xn, y) || !depth.valid(x, yn)) return;
    const Vec3 p = point(x, y);
    Vec3 n = (point(xn, y) - p).cross(point(x, yn) - p);
    if (n.norm() < tol::kSingular) return;
    n.normalize();
    if (n.dot(p) > 0.0) n = -n;  // face the camera
    cloud.points.push_back(p);
    cloud.normals.push_back(n);
  });
  return cloud;
}

namespace detail {

inline double plane_distance(const PlaneModel& plane, const Vec3& p) {
  return std::abs(plane.normal().dot(p) - plane.camera_height());
}

/// Plane through three points, oriented so that h_c >= 0. Empty when the
/// triangle area is below 1e-8 m^2 or the plane passes through the origin.
inline std::optional<PlaneModel> plane_from_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 n = (b - a).cross(c - a);
  const double area = 0.5 * n.norm();
  if (!(area > 1e-8)) return std::nullopt;
  n /= 2.0 * area;
  double d = n.dot(a);
  if (d < 0.0) {
    n = -n;
    d = -d;
  }
  if (!(d > 0.0)) return std::nullopt;
  return PlaneModel(n, d);
}

}  // namespace detail

/// Total least-squares plane: normal is the smallest-singular direction of the
/// centered points, oriented toward positive camera height.
inline PlaneModel fit_plane_least_squares(std::span<const Vec3> points) {
  require(points.size() >= 3, ErrorCode::kDegenerateCloud, "plane fit needs >= 3 points");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Eigen::Vector3d evals = eig.eigenvalues();
  // A line (or a point) has two vanishing spreads; the plane is undefined.
  require(evals(1) > 1e-12 * std::max(1.0, evals(2)), ErrorCode::kDegenerateCloud,
          "points are collinear");
  Vec3 n = eig.eigenvectors().col(0);
  double d = n.dot(centroid);
  if (d < 0.0) {
    n = -n;
    d = -d;
  }
  require(d > 0.0, ErrorCode::kDegenerateCloud, "fitted plane passes through the camera");
  return {n, d};
}

/// Sum of squared point-to-plane distances.
inline double plane_residual(const PlaneModel& plane, std::span<const Vec3> points) {
  CompensatedSum s;
  for (const auto& p : points) {
    const double r = detail::plane_distance(plane, p);
    s.add(r * r);
  }
  return s.value();
}

struct RansacResult {
  PlaneModel plane;
  std::vector<std::uint8_t> inliers;  // per input point
  std::size_t inlier_count = 0;
  int best_hypothesis = -1;

  double inlier_fraction() const {
    return inliers.empty() ? 0.0 : static_cast<double>(inlier_count) / inliers.size();
  }
};

/// Seeded RANSAC over 3-point hypotheses followed by a least-squares refit on
/// the winning inlier set. Ties keep the earliest hypothesis.
inline RansacResult ransac_plane_fit(const PointCloud& cloud, const RansacConfig& cfg) {
  cfg.validate();
  const auto& pts = cloud.points;
  require(pts.size() >= 3, ErrorCode::kDegenerateCloud, "ransac needs >= 3 points");

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);

  std::optional<PlaneModel> best;
  std::size_t best_count = 0;
  int best_index = -1;
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    const std::size_t k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const auto hyp = detail::plane_from_triangle(pts[i], pts[j], pts[k]);
    if (!hyp) continue;
    std::size_t count = 0;
    for (const auto& p : pts)
      if (detail::plane_distance(*hyp, p) <= cfg.inlier_threshold) ++count;
    if (count > best_count) {
      best = hyp;
      best_count = count;
      best_index = it;
    }
  }
  if (!best) {
    // Either every sample was degenerate or the cloud itself is; the
    // least-squares fit reports which.
    fit_plane_least_squares(pts);
    throw Error(ErrorCode::kDegenerateCloud, "no non-degenerate ransac hypothesis found");
  }

  RansacResult out{*best, {}, 0, -1};
  out.inliers.assign(pts.size(), 0);
  std::vector<Vec3> inlier_pts;
  inlier_pts.reserve(best_count);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (detail::plane_distance(*best, pts[i]) <= cfg.inlier_threshold) {
      out.inliers[i] = 1;
      inlier_pts.push_back(pts[i]);
    }
  }
  out.inlier_count = inlier_pts.size();
  out.best_hypothesis = best_index;
  if (out.inlier_fraction() < cfg.min_inlier_fraction)
    throw Error(ErrorCode::kInsufficientInliers, "too few ransac inliers");
  out.plane = fit_plane_least_squares(inlier_pts);
  return out;
}

/// Normalized arithmetic mean of the normals; arithmetic mean of the heights.
inline PlaneModel mean_plane(std::span<const PlaneModel> planes) {
  require(!planes.empty(), ErrorCode::kInvalidArgument, "mean plane of an empty set");
  std::array<CompensatedSum, 4> acc;
  for (const auto& p : planes) {
    for (int i = 0; i < 3; ++i) acc[i].add(p.normal()(i));
    acc[3].add(p.camera_height());
  }
  const double n = static_cast<double>(planes.size());
  const Vec3 normal(acc[0].value() / n, acc[1].value() / n, acc[2].value() / n);
  if (!(normal.norm() >= 1e-9))
    throw Error(ErrorCode::kCancellation, "plane normals cancel out");
  return {normal, acc[3].value() / n};
}

struct IcpConfig {
  int max_iterations = 50;
  /// Stop once the RMS residual improves by less than this (meters).
  double tolerance = 1e-10;
  /// Correspondences farther apart than this are discarded (meters).
  double max_correspondence_distance = 1.0;
  /// When both clouds carry normals, pairs whose normals disagree by more
  /// than this angle are discarded.
  double max_normal_angle_deg = 45.0;
};

struct IcpResult {
  RigidMotion motion;
  std::vector<double> residual_trace;  // RMS point-to-plane residual, initial first
  int iterations = 0;
  bool converged = false;

  double initial_residual() const { return residual_trace.front(); }
  double final_residual() const { return residual_trace.back(); }
};

namespace detail {

/// Uniform grid hash over 3D points for gated nearest-neighbour queries.
class VoxelHash {
 public:
  VoxelHash(std::span<const Vec3> points, double cell) : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(i);
  }

  /// Index of the nearest point within `gate`, lowest index on ties.
  std::optional<std::size_t> nearest(const Vec3& q, double gate) const {
    const auto c = cell_of(q);
    const double gate2 = gate * gate;
    std::optional<std::size_t> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (const std::size_t i : it->second) {
            const double d2 = (points_[i] - q).squaredNorm();
            if (d2 <= gate2 && (d2 < best_d2 || (d2 == best_d2 && i < *best))) {
              best = i;
              best_d2 = d2;
            }
          }
        }
    return best;
  }

 private:
  std::array<std::int64_t, 3> cell_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : c) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ULL;
    }
    return h;
  }

  std::span<const Vec3> points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

struct Correspondence {
  Vec3 source;  // already transformed by the current estimate
  Vec3 target;
  Vec3 normal;
};

inline std::vector<Correspondence> match(const PointCloud& source, const PointCloud& target,
                                         const VoxelHash& index, const RigidMotion& motion,
                                         const IcpConfig& cfg) {
  const double cos_gate = std::cos(cfg.max_normal_angle_deg * M_PI / 180.0);
  const bool check_normals = source.has_normals();
  std::vector<Correspondence> out;
  out.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 p = motion.apply(source.points[i]);
    const auto j = index.nearest(p, cfg.max_correspondence_distance);
    if (!j) continue;
    const Vec3& n = target.normals[*j];
    if (check_normals && (motion.rotation() * source.normals[i]).dot(n) < cos_gate) continue;
    out.push_back({p, target.points[*j], n});
  }
  return out;
}

inline double rms_residual(std::span<const Correspondence> pairs) {
  CompensatedSum s;
  for (const auto& c : pairs) {
    const double r = c.normal.dot(c.source - c.target);
    s.add(r * r);
  }
  return std::sqrt(s.value() / static_cast<double>(pairs.size()));
}

inline Mat3 rotation_from_vector(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

}  // namespace detail

/// Point-to-plane ICP: gated nearest neighbours, linearized
/// min sum (n_i . (R p_i + T - q_i))^2 solved in closed form each iteration.
/// A step is accepted only if the RMS residual does not increase, so the trace
/// is non-increasing and the final residual never exceeds the initial one.
inline IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                                    const RigidMotion& init, const IcpConfig& cfg = {}) {
  require(!source.empty() && !target.empty(), ErrorCode::kInvalidArgument,
          "icp needs nonempty clouds");
  require(target.has_normals(), ErrorCode::kInvalidArgument, "icp target needs normals");
  require(cfg.max_correspondence_distance > 0.0, ErrorCode::kInvalidArgument,
          "correspondence gate must be positive");

  const detail::VoxelHash index(target.points, 2.0 * cfg.max_correspondence_distance);
  IcpResult result{init, {}, 0, false};

  auto pairs = detail::match(source, target, index, result.motion, cfg);
  if (pairs.empty()) throw Error(ErrorCode::kNoCorrespondence, "no correspondences within gate");
  double current = detail::rms_residual(pairs);
  result.residual_trace.push_back(current);

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& c : pairs) {
      Eigen::Matrix<double, 6, 1> row;
      row << c.source.cross(c.normal), c.normal;
      const double r = c.normal.dot(c.source - c.target);
      ata += row * row.transpose();
      atb -= row * r;
    }
    // Minimum-norm step: directions the geometry leaves unconstrained
    // (e.g. sliding along a single plane) receive no update.
    const Eigen::Matrix<double, 6, 1> step = ata.completeOrthogonalDecomposition().solve(atb);
    const Mat3 dR = detail::rotation_from_vector(step.head<3>());
    const Mat3 R = RigidMotion::project_to_rotation(dR * result.motion.rotation());
    const RigidMotion candidate(R, dR * result.motion.translation() + step.tail<3>());

    auto next_pairs = detail::match(source, target, index, candidate, cfg);
    if (next_pairs.empty()) break;
    const double next = detail::rms_residual(next_pairs);
    if (next > current) break;

    result.motion = candidate;
    result.iterations = it + 1;
    result.residual_trace.push_back(next);
    pairs = std::move(next_pairs);
    const bool small_step = step.norm() < 1e-14;
    const bool stalled = current - next < cfg.tolerance;
    current = next;
    if (small_step || stalled) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace ppgeo
