#pragma once

// Residual flow after plane alignment and its inversion back to gamma.
//
// With the source frame warped onto the target by the plane homography, a
// target pixel p_t of a point at gamma = h / z is displaced by
//
//   u_res = p_w - p_t = f / (1 - f) * (p_t - e_t),   f = gamma * t_z / h_c
//
// when t_z != 0, and by u_res = -(gamma / h_c) * (t_x', t_y') with t = K T
// when t_z == 0. h_c is the camera height of the source-frame plane that
// built the homography.

#include <cmath>
#include <cstddef>

#include "ppgeo/core_geometry.hpp"
#include "ppgeo/grid.hpp"

namespace ppgeo {

struct EpipoleMaskPolicy {
  double min_epipole_dist = 2.0;
  double max_gamma_factor = 0.9;

  void validate() const {
    require(min_epipole_dist > 0.0, ErrorCode::kInvalidArgument,
            "min_epipole_dist must be positive");
    require(max_gamma_factor > 0.0 && max_gamma_factor < 1.0, ErrorCode::kInvalidArgument,
            "max_gamma_factor must lie in (0, 1)");
  }
};

inline Vec2 residual_flow_forward(double gamma, const PixelPoint& p_t, const PixelPoint& e_t,
                                  double t_z, double camera_height) {
  if (!(std::abs(t_z) > tol::kSingular))
    throw Error(ErrorCode::kLateralMotion, "t_z is zero; use the lateral branch");
  const double f = gamma * t_z / camera_height;
  if (!(std::abs(1.0 - f) >= tol::kSingular))
    throw Error(ErrorCode::kPole, "gamma * t_z / h_c is 1; residual flow diverges");
  return (f / (1.0 - f)) * (p_t - e_t);
}

/// t_z == 0 branch; `t` is K T (its third component must vanish).
inline Vec2 residual_flow_forward_lateral(double gamma, const Vec3& t, double camera_height) {
  require(std::abs(t.z()) <= tol::kSingular, ErrorCode::kInvalidArgument,
          "lateral branch needs t_z == 0");
  return -(gamma / camera_height) * t.head<2>();
}

/// Inverts residual_flow_forward. The vector ratio (p_t - e_t) / u_res is taken
/// through the collinear scalar k = u.d / |d|^2, so gamma = (h_c / t_z) k / (1 + k).
inline double gamma_from_flow(const Vec2& u_res, const PixelPoint& p_t, const PixelPoint& e_t,
                              double t_z, double camera_height,
                              const EpipoleMaskPolicy& policy = {}) {
  if (!(std::abs(t_z) > tol::kSingular))
    throw Error(ErrorCode::kLateralMotion, "t_z is zero; gamma is not recoverable from flow");
  const Vec2 d = p_t - e_t;
  const double dist2 = d.squaredNorm();
  if (!(dist2 >= policy.min_epipole_dist * policy.min_epipole_dist))
    throw Error(ErrorCode::kEpipoleProximity, "pixel is too close to the epipole");
  if (u_res.x() == 0.0 && u_res.y() == 0.0) return 0.0;
  const double k = u_res.dot(d) / dist2;
  if (!(std::abs(1.0 + k) >= tol::kSingular))
    throw Error(ErrorCode::kDegenerate, "residual flow collapses the pixel onto the epipole");
  return (camera_height / t_z) * k / (1.0 + k);
}

/// Dense warp_point(H, p) - p; pixels mapped to infinity are left invalid.
inline FlowField planar_warp_field(const Homography& H, int width, int height) {
  FlowField out(width, height, Vec2::Zero());
  for_each_pixel(width, height, [&](int x, int y) {
    const Vec3 q = H.matrix * Vec3(x, y, 1.0);
    if (!(std::abs(q.z()) >= tol::kSingular)) return;
    const Vec2 d(q.x() / q.z() - x, q.y() / q.z() - y);
    if (d.allFinite()) out.set(x, y, d);
  });
  return out;
}

struct GammaMapResult {
  ScalarGrid gamma;
  std::size_t input_valid = 0;
  std::size_t near_epipole = 0;
  std::size_t extreme_factor = 0;

  std::size_t output_valid() const { return gamma.mask().count(); }
  /// Fraction of input-valid pixels dropped by the policy.
  double masked_fraction() const {
    return input_valid == 0 ? 0.0
                            : static_cast<double>(input_valid - output_valid()) / input_valid;
  }
};

/// Dense gamma recovery. Pixels near the epipole, or whose recovered
/// |gamma t_z / h_c| exceeds the policy bound, are masked rather than filled.
inline GammaMapResult gamma_map_from_flow(const FlowField& flow, const PixelPoint& e_t, double t_z,
                                          double camera_height,
                                          const EpipoleMaskPolicy& policy = {}) {
  policy.validate();
  if (!(std::abs(t_z) > tol::kSingular))
    throw Error(ErrorCode::kLateralMotion, "t_z is zero; gamma is not recoverable from flow");
  GammaMapResult r{ScalarGrid(flow.width(), flow.height(), 0.0), 0, 0, 0};
  const double min_d2 = policy.min_epipole_dist * policy.min_epipole_dist;
  for_each_pixel(flow.width(), flow.height(), [&](int x, int y) {
    if (!flow.valid(x, y)) return;
    ++r.input_valid;
    const PixelPoint p{static_cast<double>(x), static_cast<double>(y)};
    if ((p - e_t).squaredNorm() < min_d2) {
      ++r.near_epipole;
      return;
    }
    double g = 0.0;
    try {
      g = gamma_from_flow(flow(x, y), p, e_t, t_z, camera_height, policy);
    } catch (const Error&) {
      ++r.extreme_factor;
      return;
    }
    if (!std::isfinite(g) || std::abs(g * t_z / camera_height) > policy.max_gamma_factor) {
      ++r.extreme_factor;
      return;
    }
    r.gamma.set(x, y, g);
  });
  return r;
}

}  // namespace ppgeo
