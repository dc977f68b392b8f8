#pragma once

// Analytic scenes (a ground plane plus axis-aligned boxes) rendered by ray
// casting into exact depth, height, gamma and residual-flow rasters.
//
// The scene frame has the ground at z = 0 with z pointing up. Camera poses
// map scene coordinates into camera coordinates (x-right, y-down, z-forward).

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ppgeo/core_geometry.hpp"
#include "ppgeo/grid.hpp"

namespace ppgeo {

struct Box {
  Vec3 center;
  Vec3 extents;  // full side lengths along scene x, y, z

  Vec3 min_corner() const { return center - 0.5 * extents; }
  Vec3 max_corner() const { return center + 0.5 * extents; }
};

struct SyntheticScene {
  std::vector<Box> objects;
  /// Hits farther than this (camera-frame z) render as sky.
  double sky_depth = std::numeric_limits<double>::infinity();

  void validate() const {
    require(sky_depth > 0.0, ErrorCode::kInvalidArgument, "sky depth must be positive");
    for (const auto& b : objects) {
      require(b.center.allFinite() && b.extents.allFinite(), ErrorCode::kInvalidArgument,
              "box must be finite");
      require((b.extents.array() > 0.0).all(), ErrorCode::kInvalidArgument,
              "box extents must be positive");
      require(b.min_corner().z() >= -1e-12, ErrorCode::kInvalidArgument,
              "boxes must rest on or above the ground");
    }
  }
};

enum class HitKind : std::uint8_t { kSky = 0, kGround = 1, kObject = 2 };

struct RenderedFrame {
  ScalarGrid depth;   // camera-frame z
  ScalarGrid height;  // above ground
  ScalarGrid gamma;   // height / depth
  Grid<HitKind> hits;
};

/// Scene-to-camera pose of a camera at `position` looking along scene +x
/// rotated by `yaw` about scene z, then `pitch` about the camera x axis and
/// `roll` about the optical axis. Angles in radians.
inline RigidMotion camera_pose(const Vec3& position, double yaw = 0.0, double pitch = 0.0,
                               double roll = 0.0) {
  Mat3 base;
  base << std::sin(yaw), -std::cos(yaw), 0.0,  // right
      0.0, 0.0, -1.0,                          // down
      std::cos(yaw), std::sin(yaw), 0.0;       // forward
  const Mat3 r = Eigen::AngleAxisd(roll, Vec3::UnitZ()).toRotationMatrix() *
                 Eigen::AngleAxisd(pitch, Vec3::UnitX()).toRotationMatrix() * base;
  return {r, -r * position};
}

/// The scene ground expressed in the camera frame of `pose`.
inline PlaneModel ground_plane_in_camera(const RigidMotion& pose) {
  const Vec3 center = -pose.rotation().transpose() * pose.translation();
  require(center.z() > 0.0, ErrorCode::kInvalidArgument, "camera must be above the ground");
  return {pose.rotation() * Vec3(0.0, 0.0, -1.0), center.z()};
}

namespace detail {

struct RayHit {
  double s = std::numeric_limits<double>::infinity();
  HitKind kind = HitKind::kSky;
  double height = 0.0;
};

/// Slab test; returns the entry parameter and the scene height at the hit.
inline bool intersect_box(const Box& box, const Vec3& origin, const Vec3& dir, double& s_out,
                          double& height_out) {
  const Vec3 lo = box.min_corner();
  const Vec3 hi = box.max_corner();
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (dir(a) == 0.0) {
      if (origin(a) < lo(a) || origin(a) > hi(a)) return false;
      continue;
    }
    double t0 = (lo(a) - origin(a)) / dir(a);
    double t1 = (hi(a) - origin(a)) / dir(a);
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      axis = a;
    }
    t_far = std::min(t_far, t1);
  }
  if (!(t_near <= t_far) || !(t_near > 0.0)) return false;
  s_out = t_near;
  if (axis == 2)
    height_out = dir.z() < 0.0 ? hi.z() : lo.z();
  else
    height_out = origin.z() + t_near * dir.z();
  return true;
}

inline RayHit cast(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir) {
  RayHit best;
  if (dir.z() < 0.0) best = {-origin.z() / dir.z(), HitKind::kGround, 0.0};
  for (const auto& box : scene.objects) {
    double s = 0.0;
    double h = 0.0;
    if (intersect_box(box, origin, dir, s, h) && s < best.s) best = {s, HitKind::kObject, h};
  }
  if (best.kind != HitKind::kSky && !(best.s <= scene.sky_depth)) best = RayHit{};
  return best;
}

}  // namespace detail

/// Ray-casts every pixel. Rays are K^-1 p with unit camera z, so the ray
/// parameter at the hit is the camera-frame depth directly.
inline RenderedFrame render(const SyntheticScene& scene, const CameraIntrinsics& K,
                            const RigidMotion& pose, int width, int height) {
  scene.validate();
  require(width >= 1 && height >= 1, ErrorCode::kInvalidArgument, "render needs a nonempty raster");
  const Mat3 rt = pose.rotation().transpose();
  const Vec3 origin = -rt * pose.translation();
  require(origin.z() > 0.0, ErrorCode::kInvalidArgument, "camera must be above the ground");

  RenderedFrame f{ScalarGrid(width, height), ScalarGrid(width, height), ScalarGrid(width, height),
                  Grid<HitKind>(width, height, HitKind::kSky, true)};
  for_each_pixel(width, height, [&](int x, int y) {
    const Vec3 dir = rt * K.ray({static_cast<double>(x), static_cast<double>(y)});
    const auto hit = detail::cast(scene, origin, dir);
    f.hits(x, y) = hit.kind;
    if (hit.kind == HitKind::kSky) return;
    f.depth.set(x, y, hit.s);
    f.height.set(x, y, hit.height);
    f.gamma.set(x, y, hit.height / hit.s);
  });
  return f;
}

/// Geometric residual flow for the target view of `target_pose`: each hit
/// point P_t is moved into the source frame (P_s = R^T (P_t - T)), projected,
/// warped by the homography of `source_plane` and compared with p_t.
/// Pixels whose source projection leaves the frame, falls behind the camera
/// or warps to infinity are masked.
inline FlowField render_residual_flow(const SyntheticScene& scene, const CameraIntrinsics& K,
                                      const RigidMotion& target_pose, const RigidMotion& motion,
                                      const PlaneModel& source_plane, int width, int height) {
  const RenderedFrame frame = render(scene, K, target_pose, width, height);
  const Homography H = homography_from_motion(K, motion, source_plane);
  const RigidMotion to_source = motion.inverse();
  FlowField flow(width, height, Vec2::Zero());
  for_each_pixel(width, height, [&](int x, int y) {
    if (!frame.depth.valid(x, y)) return;
    const PixelPoint p_t{static_cast<double>(x), static_cast<double>(y)};
    const Vec3 P_t = frame.depth(x, y) * K.ray(p_t);
    const Vec3 P_s = to_source.apply(P_t);
    if (!(P_s.z() > 0.0)) return;
    const PixelPoint p_s = K.project(P_s);
    if (p_s.u < 0.0 || p_s.u > width - 1 || p_s.v < 0.0 || p_s.v > height - 1) return;
    const Vec3 q = H.matrix * p_s.homogeneous();
    if (!(std::abs(q.z()) >= tol::kSingular)) return;
    flow.set(x, y, Vec2(q.x() / q.z(), q.y() / q.z()) - p_t.vec());
  });
  return flow;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform in (0, 1] from the top 53 bits.
inline double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace detail

/// Adds isotropic Gaussian noise to every valid vector. Each pixel draws from
/// its own counter-derived stream, so the result depends only on (seed, index).
inline FlowField perturb_flow(const FlowField& flow, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::kInvalidArgument,
          "noise sigma must be finite and non-negative");
  FlowField out = flow;
  if (sigma == 0.0) return out;
  const std::uint64_t stream = detail::splitmix64(seed);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out.valid(i)) continue;
    const std::uint64_t a = detail::splitmix64(stream ^ (2 * i));
    const std::uint64_t b = detail::splitmix64(stream ^ (2 * i + 1));
    const double radius = std::sqrt(-2.0 * std::log(detail::unit_open(a)));
    const double theta = 2.0 * M_PI * detail::unit_open(b);
    out[i] += sigma * radius * Vec2(std::cos(theta), std::sin(theta));
  }
  return out;
}

}  // namespace ppgeo
