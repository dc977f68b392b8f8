#pragma once

// Camera, plane and motion types plus the closed-form maps between
// gamma (height over depth), depth, height, the plane-induced homography,
// the epipole and the planar position embedding.
//
// Conventions:
//  * camera frame is x-right, y-down, z-forward;
//  * pixel centers sit at integer (u, v) and lift to (u, v, 1);
//  * a plane is (N, h_c) with N the unit normal pointing from the camera
//    toward the plane, so N^T P = h_c - h for a point P at height h;
//  * a RigidMotion maps source-camera coordinates to target-camera
//    coordinates, P_t = R P_s + T.

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "ppgeo/error.hpp"
#include "ppgeo/grid.hpp"

namespace ppgeo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  Vec3 homogeneous() const { return {u, v, 1.0}; }
  Vec2 vec() const { return {u, v}; }
  static PixelPoint from(const Vec2& p) { return {p.x(), p.y()}; }

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

inline Vec2 operator-(const PixelPoint& a, const PixelPoint& b) { return a.vec() - b.vec(); }

class CameraIntrinsics {
 public:
  CameraIntrinsics(double fx, double fy, double cx, double cy)
      : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
    require(std::isfinite(fx) && std::isfinite(fy) && fx > 0.0 && fy > 0.0,
            ErrorCode::kInvalidArgument, "focal lengths must be finite and positive");
    require(std::isfinite(cx) && std::isfinite(cy), ErrorCode::kInvalidArgument,
            "principal point must be finite");
  }

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  Mat3 matrix() const {
    Mat3 k;
    k << fx_, 0.0, cx_, 0.0, fy_, cy_, 0.0, 0.0, 1.0;
    return k;
  }

  Mat3 inverse() const {
    Mat3 k;
    k << 1.0 / fx_, 0.0, -cx_ / fx_, 0.0, 1.0 / fy_, -cy_ / fy_, 0.0, 0.0, 1.0;
    return k;
  }

  /// K^-1 p; the returned ray has unit z so scaling by depth gives the point.
  Vec3 ray(const PixelPoint& p) const {
    return {(p.u - cx_) / fx_, (p.v - cy_) / fy_, 1.0};
  }

  /// Perspective projection of a camera-frame point with P.z != 0.
  PixelPoint project(const Vec3& P) const {
    return {fx_ * P.x() / P.z() + cx_, fy_ * P.y() / P.z() + cy_};
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;

 private:
  double fx_, fy_, cx_, cy_;
};

class PlaneModel {
 public:
  /// Normalizes `normal`; rejects zero normals and non-positive heights.
  PlaneModel(const Vec3& normal, double camera_height) : camera_height_(camera_height) {
    const double n = normal.norm();
    require(std::isfinite(n) && n > tol::kSingular, ErrorCode::kInvalidArgument,
            "plane normal must be nonzero and finite");
    require(std::isfinite(camera_height) && camera_height > 0.0, ErrorCode::kInvalidArgument,
            "camera height must be positive");
    normal_ = normal / n;
  }

  const Vec3& normal() const { return normal_; }
  double camera_height() const { return camera_height_; }

  /// Height above the plane, h = h_c - N^T P.
  double height_of(const Vec3& P) const { return camera_height_ - normal_.dot(P); }

  friend bool operator==(const PlaneModel&, const PlaneModel&) = default;

 private:
  Vec3 normal_;
  double camera_height_;
};

class RigidMotion {
 public:
  RigidMotion() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidMotion(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {
    require(rotation.allFinite() && translation.allFinite(), ErrorCode::kInvalidArgument,
            "motion must be finite");
    require(orthonormality_error(rotation) <= tol::kRigid, ErrorCode::kNonRigid,
            "rotation is not orthonormal with det 1");
  }

  static RigidMotion identity() { return {}; }

  /// Max-abs deviation of R^T R from I combined with |det R - 1|.
  static double orthonormality_error(const Mat3& r) {
    const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
    return std::max(ortho, std::abs(r.determinant() - 1.0));
  }

  /// Nearest rotation in the Frobenius sense (polar projection via SVD).
  static Mat3 project_to_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  RigidMotion inverse() const {
    const Mat3 rt = rotation_.transpose();
    return {rt, -rt * translation_};
  }

  /// (this * other)(p) = this(other(p)).
  RigidMotion operator*(const RigidMotion& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

struct Homography {
  Mat3 matrix = Mat3::Identity();

  Homography inverse() const {
    require(std::abs(matrix.determinant()) > tol::kSingular, ErrorCode::kSingularHomography,
            "homography is not invertible");
    return {matrix.inverse()};
  }
};

/// Re-expresses a plane given in frame A in frame B, where P_B = motion(P_A).
inline PlaneModel transform_plane(const PlaneModel& plane, const RigidMotion& motion) {
  const Vec3 n = motion.rotation() * plane.normal();
  return {n, plane.camera_height() + n.dot(motion.translation())};
}

/// H = K (R + T N^T / h_c) K^-1 with (N, h_c) expressed in the source frame.
inline Homography homography_from_motion(const CameraIntrinsics& K, const RigidMotion& motion,
                                         const PlaneModel& source_plane) {
  const Mat3 inner = motion.rotation() + motion.translation() * source_plane.normal().transpose() /
                                             source_plane.camera_height();
  Homography h{K.matrix() * inner * K.inverse()};
  const double det = h.matrix.determinant();
  if (!(std::abs(det) >= tol::kSingular)) {
    std::ostringstream msg;
    msg << "plane-induced homography is singular (det = " << det << ")";
    throw Error(ErrorCode::kSingularHomography, msg.str());
  }
  return h;
}

/// p_w = H p_s / (H_3 p_s).
inline PixelPoint warp_point(const Homography& H, const PixelPoint& p) {
  const Vec3 q = H.matrix * p.homogeneous();
  if (!(std::abs(q.z()) >= tol::kSingular))
    throw Error(ErrorCode::kPointAtInfinity, "pixel warps to infinity");
  return {q.x() / q.z(), q.y() / q.z()};
}

/// Image of the source camera center in the target view, K T / t_z.
inline PixelPoint epipole(const CameraIntrinsics& K, const Vec3& translation) {
  if (!(std::abs(translation.z()) > tol::kSingular))
    throw Error(ErrorCode::kLateralMotion, "t_z is zero; the epipole lies at infinity");
  const Vec3 t = K.matrix() * translation;
  return {t.x() / t.z(), t.y() / t.z()};
}

/// Planar position embedding N^T (K^-1 p), equal to (h_c - h) / z at the imaged point.
inline double ppe_value(const CameraIntrinsics& K, const PlaneModel& plane, const PixelPoint& p) {
  return plane.normal().dot(K.ray(p));
}

inline ScalarGrid ppe_map(const CameraIntrinsics& K, const PlaneModel& plane, int width,
                          int height) {
  require(width >= 1 && height >= 1, ErrorCode::kInvalidArgument, "ppe map needs a nonempty raster");
  ScalarGrid out(width, height, 0.0, true);
  for_each_pixel(width, height, [&](int x, int y) {
    out(x, y) = ppe_value(K, plane, {static_cast<double>(x), static_cast<double>(y)});
  });
  return out;
}

/// z = h_c / (gamma + ppe).
inline double gamma_to_depth(double gamma, double ppe, double camera_height) {
  const double denom = gamma + ppe;
  if (!(denom > tol::kHorizon)) {
    std::ostringstream msg;
    msg << "gamma + ppe = " << denom << " is not positive; depth is unbounded";
    throw Error(ErrorCode::kHorizon, msg.str());
  }
  return camera_height / denom;
}

/// gamma = h_c / z - ppe.
inline double depth_to_gamma(double depth, double ppe, double camera_height) {
  if (!(depth > 0.0)) throw Error(ErrorCode::kNonPositiveDepth, "depth must be positive");
  return camera_height / depth - ppe;
}

inline double height_from_gamma(double gamma, double depth) {
  if (!(depth > 0.0)) throw Error(ErrorCode::kNonPositiveDepth, "depth must be positive");
  return gamma * depth;
}

}  // namespace ppgeo
