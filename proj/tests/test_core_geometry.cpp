#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ppgeo/core_geometry.hpp"
#include "test_support.hpp"

namespace ppgeo {
namespace {

using test::random_rotation;
using test::uniform;
using test::uniform_vec;

const CameraIntrinsics kK100(100.0, 100.0, 50.0, 50.0);

TEST(CameraIntrinsics, RejectsBadFocalLengths) {
  EXPECT_PPGEO_ERROR(CameraIntrinsics(0.0, 1.0, 0.0, 0.0), ErrorCode::kInvalidArgument);
  EXPECT_PPGEO_ERROR(CameraIntrinsics(1.0, -2.0, 0.0, 0.0), ErrorCode::kInvalidArgument);
  EXPECT_PPGEO_ERROR(CameraIntrinsics(1.0, 1.0, NAN, 0.0), ErrorCode::kInvalidArgument);
}

TEST(CameraIntrinsics, InverseMatchesMatrixInverse) {
  const CameraIntrinsics K(721.5, 710.25, 609.6, 172.9);
  EXPECT_TRUE((K.inverse() * K.matrix()).isApprox(Mat3::Identity(), 1e-15));
  const PixelPoint p{300.25, 91.5};
  const PixelPoint back = K.project(7.0 * K.ray(p));
  EXPECT_NEAR(back.u, p.u, 1e-12);
  EXPECT_NEAR(back.v, p.v, 1e-12);
}

TEST(PlaneModel, NormalizesAndValidates) {
  const PlaneModel p(Vec3(0.0, 2.0, 0.0), 1.5);
  EXPECT_EQ(p.normal(), Vec3(0.0, 1.0, 0.0));
  EXPECT_PPGEO_ERROR(PlaneModel(Vec3::Zero(), 1.0), ErrorCode::kInvalidArgument);
  EXPECT_PPGEO_ERROR(PlaneModel(Vec3::UnitY(), 0.0), ErrorCode::kInvalidArgument);
  EXPECT_DOUBLE_EQ(p.height_of(Vec3(0.0, 1.5, 10.0)), 0.0);
  EXPECT_DOUBLE_EQ(p.height_of(Vec3(0.0, 0.0, 10.0)), 1.5);
}

TEST(RigidMotion, RejectsNonRotation) {
  Mat3 r = Mat3::Identity();
  r(0, 1) = 1e-6;
  EXPECT_PPGEO_ERROR(RigidMotion(r, Vec3::Zero()), ErrorCode::kNonRigid);
  EXPECT_PPGEO_ERROR(RigidMotion(-Mat3::Identity(), Vec3::Zero()), ErrorCode::kNonRigid);
}

TEST(RigidMotion, InverseAndComposition) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const RigidMotion a(random_rotation(rng, M_PI), uniform_vec(rng, -3, 3));
    const RigidMotion b(random_rotation(rng, M_PI), uniform_vec(rng, -3, 3));
    const Vec3 p = uniform_vec(rng, -5, 5);
    EXPECT_TRUE((a * a.inverse()).apply(p).isApprox(p, 1e-12));
    EXPECT_TRUE((a * b).apply(p).isApprox(a.apply(b.apply(p)), 1e-12));
  }
}

TEST(TransformPlane, PointsStayOnPlane) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const PlaneModel a(uniform_vec(rng, -1, 1) + Vec3(0, 2, 0), uniform(rng, 0.5, 3.0));
    const RigidMotion m(random_rotation(rng, 0.3), uniform_vec(rng, -0.5, 0.5));
    const PlaneModel b = transform_plane(a, m);
    // A point on plane A: foot of the normal plus in-plane offsets.
    const Vec3 u = a.normal().unitOrthogonal();
    const Vec3 v = a.normal().cross(u);
    const Vec3 P = a.camera_height() * a.normal() + uniform(rng, -5, 5) * u + uniform(rng, -5, 5) * v;
    EXPECT_NEAR(b.height_of(m.apply(P)), 0.0, 1e-12);
  }
}

TEST(Homography, IdentityMotionGivesIdentity) {
  const Homography H = homography_from_motion(kK100, RigidMotion{}, PlaneModel(Vec3(0.3, 1, 0), 1.2));
  EXPECT_TRUE(H.matrix.isApprox(Mat3::Identity(), 1e-15));
}

TEST(Homography, ForwardMotionLevelPlane) {
  const CameraIntrinsics I(1.0, 1.0, 0.0, 0.0);
  const RigidMotion m(Mat3::Identity(), Vec3(0.0, 0.0, 0.75));
  const Homography H = homography_from_motion(I, m, PlaneModel(Vec3::UnitY(), 1.5));
  Mat3 expected;
  expected << 1, 0, 0, 0, 1, 0, 0, 0.5, 1;
  EXPECT_EQ(H.matrix, expected);
}

TEST(Homography, SingularIsRejected) {
  // R + T N^T / h_c with T = -h_c N collapses the normal direction.
  const CameraIntrinsics I(1.0, 1.0, 0.0, 0.0);
  const RigidMotion m(Mat3::Identity(), Vec3(0.0, -1.5, 0.0));
  EXPECT_PPGEO_ERROR(homography_from_motion(I, m, PlaneModel(Vec3::UnitY(), 1.5)),
                     ErrorCode::kSingularHomography);
}

// Plane points projected through both cameras land where H sends them.
TEST(Homography, AlignsPlanePointsBetweenViews) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const CameraIntrinsics K(uniform(rng, 200, 900), uniform(rng, 200, 900), uniform(rng, 100, 600),
                             uniform(rng, 80, 300));
    const RigidMotion m(random_rotation(rng, 0.1), uniform_vec(rng, -1, 1));
    const PlaneModel src(Vec3(uniform(rng, -0.1, 0.1), 1.0, uniform(rng, -0.1, 0.1)), uniform(rng, 1, 2));
    const Homography H = homography_from_motion(K, m, src);
    for (int i = 0; i < 100; ++i) {
      const PixelPoint p_s{uniform(rng, 0, 2 * K.cx()), uniform(rng, 0, 2 * K.cy())};
      const Vec3 ray = K.ray(p_s);
      const double denom = src.normal().dot(ray);
      if (denom < 1e-2) continue;
      const Vec3 Pt = m.apply(src.camera_height() / denom * ray);
      if (Pt.z() < 0.5) continue;
      const PixelPoint w = warp_point(H, p_s);
      const PixelPoint expected = K.project(Pt);
      EXPECT_NEAR(w.u, expected.u, 1e-7);
      EXPECT_NEAR(w.v, expected.v, 1e-7);
    }
  }
}

TEST(WarpPoint, Examples) {
  EXPECT_EQ(warp_point(Homography{}, {17.5, 3.0}), (PixelPoint{17.5, 3.0}));
  Homography scale{Mat3::Identity()};
  scale.matrix(0, 0) = scale.matrix(1, 1) = 2.0;
  EXPECT_EQ(warp_point(scale, {3.0, 4.0}), (PixelPoint{6.0, 8.0}));
}

TEST(WarpPoint, AtInfinity) {
  Homography h{Mat3::Identity()};
  h.matrix(2, 0) = 1.0;
  h.matrix(2, 2) = -2.0;
  EXPECT_PPGEO_ERROR(warp_point(h, {2.0, 0.0}), ErrorCode::kPointAtInfinity);
}

TEST(WarpPoint, InverseRoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    Mat3 m = Mat3::Identity() + 0.2 * Mat3::Random();
    m(2, 0) *= 1e-3;
    m(2, 1) *= 1e-3;
    const Homography H{m};
    const PixelPoint p{uniform(rng, 0, 640), uniform(rng, 0, 480)};
    const PixelPoint back = warp_point(H.inverse(), warp_point(H, p));
    EXPECT_NEAR(back.u, p.u, 1e-9);
    EXPECT_NEAR(back.v, p.v, 1e-9);
  }
}

TEST(Epipole, Examples) {
  EXPECT_EQ(epipole(kK100, Vec3(0, 0, 1)), (PixelPoint{50.0, 50.0}));
  EXPECT_EQ(epipole(kK100, Vec3(1, 0, 2)), (PixelPoint{100.0, 50.0}));
  EXPECT_PPGEO_ERROR(epipole(kK100, Vec3(1, 0, 0)), ErrorCode::kLateralMotion);
}

// The epipole is the image of the source camera center seen from the target.
TEST(Epipole, IsImageOfSourceCenter) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const RigidMotion m(random_rotation(rng, 0.5), uniform_vec(rng, -1, 1));
    const Vec3 center_in_target = m.apply(Vec3::Zero());
    const PixelPoint e = epipole(kK100, m.translation());
    const PixelPoint p = kK100.project(center_in_target);
    EXPECT_NEAR(e.u, p.u, 1e-9 * (1 + std::abs(p.u)));
    EXPECT_NEAR(e.v, p.v, 1e-9 * (1 + std::abs(p.v)));
  }
}

TEST(Ppe, Examples) {
  const PlaneModel level(Vec3::UnitY(), 1.5);
  EXPECT_EQ(ppe_value(kK100, level, {50.0, 50.0}), 0.0);
  EXPECT_EQ(ppe_value(kK100, level, {50.0, 150.0}), 1.0);
  const ScalarGrid one = ppe_map(CameraIntrinsics(10, 10, 0, 0), level, 1, 1);
  EXPECT_EQ(one(0, 0), 0.0);
  EXPECT_TRUE(one.valid(0, 0));
}

TEST(Ppe, LevelCameraIsAffineInRows) {
  const CameraIntrinsics K(120.0, 80.0, 31.5, 23.5);
  const ScalarGrid m = ppe_map(K, PlaneModel(Vec3::UnitY(), 1.5), 64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) EXPECT_NEAR(m(x, y), (y - 23.5) / 80.0, 1e-15);
}

TEST(Ppe, MapMatchesPointwise) {
  const PlaneModel tilted(Vec3(0.05, 1.0, -0.08), 1.7);
  const CameraIntrinsics K(300.0, 310.0, 40.0, 30.0);
  const ScalarGrid m = ppe_map(K, tilted, 80, 60);
  for_each_pixel(80, 60, [&](int x, int y) {
    EXPECT_EQ(m(x, y), ppe_value(K, tilted, {double(x), double(y)}));
  });
}

// (h_c - h) / z at the projection of a scene point with known height.
TEST(Ppe, EqualsHeightOverDepth) {
  std::mt19937_64 rng(21);
  const PlaneModel plane(Vec3(0.02, 1.0, 0.05), 1.6);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 P(uniform(rng, -10, 10), uniform(rng, -3, 1.5), uniform(rng, 1, 80));
    const double h = plane.height_of(P);
    const double ppe = ppe_value(kK100, plane, kK100.project(P));
    EXPECT_NEAR(ppe, (plane.camera_height() - h) / P.z(), 1e-9);
  }
}

TEST(GammaDepth, Examples) {
  EXPECT_DOUBLE_EQ(gamma_to_depth(0.15, 0.0, 1.5), 10.0);
  EXPECT_DOUBLE_EQ(gamma_to_depth(0.0, 0.15, 1.5), 10.0);
  EXPECT_PPGEO_ERROR(gamma_to_depth(0.05, -0.05, 1.5), ErrorCode::kHorizon);
  EXPECT_DOUBLE_EQ(depth_to_gamma(10.0, 0.0, 1.5), 0.15);
  EXPECT_DOUBLE_EQ(depth_to_gamma(10.0, 0.15, 1.5), 0.0);
  EXPECT_PPGEO_ERROR(depth_to_gamma(0.0, 0.1, 1.5), ErrorCode::kNonPositiveDepth);
  EXPECT_DOUBLE_EQ(height_from_gamma(0.15, 10.0), 1.5);
  EXPECT_EQ(height_from_gamma(0.0, 37.0), 0.0);
}

TEST(GammaDepth, RoundTrip) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    const double z = uniform(rng, 1.0, 200.0);
    const double ppe = uniform(rng, -0.2, 0.6);
    const double hc = uniform(rng, 1.0, 2.5);
    const double g = depth_to_gamma(z, ppe, hc);
    EXPECT_NEAR(gamma_to_depth(g, ppe, hc), z, 1e-9 * z);
    EXPECT_NEAR(height_from_gamma(g, z) / z, g, 1e-15);
  }
}

}  // namespace
}  // namespace ppgeo
