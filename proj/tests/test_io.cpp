#include <png.h>

#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "ppgeo/ppgeo.hpp"
#include "test_support.hpp"

namespace ppgeo {
namespace {

using test::TempDir;
using test::uniform;

std::vector<std::uint8_t> gray8_png(int w, int h) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h, 7);
  png_alloc_size_t size = 0;
  png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr);
  std::vector<std::uint8_t> out(size);
  png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr);
  out.resize(size);
  return out;
}

ScalarGrid quantized_depth(std::mt19937_64& rng, int w, int h) {
  ScalarGrid d(w, h);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (uniform(rng, 0, 1) > 0.2) d.set(i, std::round(uniform(rng, 0.01, 255.0) * 256.0) / 256.0);
  return d;
}

void expect_bitwise_equal(const ScalarGrid& a, const ScalarGrid& b) {
  ASSERT_TRUE(a.same_shape(b));
  EXPECT_EQ(a.mask(), b.mask());
  EXPECT_EQ(0, std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)));
}

// ---- PNG16 ----------------------------------------------------------------------

TEST(Png16, RawConvention) {
  std::vector<std::uint8_t> bytes;
  ASSERT_TRUE(io::detail::encode_gray16(2, 1, {25600, 0}, bytes));
  const ScalarGrid d = io::decode_depth_png16(bytes);
  EXPECT_EQ(d(0, 0), 100.0);
  EXPECT_TRUE(d.valid(0, 0));
  EXPECT_FALSE(d.valid(1, 0));
}

TEST(Png16, RoundTripIsBitwise) {
  std::mt19937_64 rng(1);
  TempDir dir;
  for (int i = 0; i < 10; ++i) {
    const ScalarGrid d = quantized_depth(rng, 37, 23);
    io::write_depth_png16(dir / "d.png", d);
    expect_bitwise_equal(io::read_depth_png16(dir / "d.png"), d);
  }
}

TEST(Png16, Errors) {
  EXPECT_PPGEO_ERROR(io::decode_depth_png16({1, 2, 3}), ErrorCode::kMalformedFile);
  std::vector<std::uint8_t> bytes;
  ASSERT_TRUE(io::detail::encode_gray16(8, 8, std::vector<std::uint16_t>(64, 300), bytes));
  bytes.resize(bytes.size() / 2);
  EXPECT_PPGEO_ERROR(io::decode_depth_png16(bytes), ErrorCode::kMalformedFile);
  EXPECT_PPGEO_ERROR(io::decode_depth_png16(gray8_png(4, 4)), ErrorCode::kWrongBitDepth);
  ScalarGrid far(1, 1);
  far.set(0, 0, 300.0);
  EXPECT_PPGEO_ERROR(io::encode_depth_png16(far), ErrorCode::kInvalidArgument);
}

// ---- .flo -----------------------------------------------------------------------

TEST(Flo, SinglePixel) {
  FlowField f(1, 1, Vec2::Zero());
  f.set(0, 0, Vec2(0.5, -2.0));
  const auto bytes = io::encode_flo(f);
  EXPECT_EQ(bytes.size(), 20u);
  const FlowField g = io::decode_flo(bytes);
  EXPECT_EQ(g(0, 0), Vec2(0.5, -2.0));
  EXPECT_EQ(io::encode_flo(g), bytes);
}

TEST(Flo, RandomRoundTrip) {
  std::mt19937_64 rng(2);
  TempDir dir;
  for (int t = 0; t < 10; ++t) {
    FlowField f(29, 17, Vec2::Zero());
    for (std::size_t i = 0; i < f.size(); ++i)
      if (uniform(rng, 0, 1) > 0.1)
        f.set(i, Vec2(std::round(uniform(rng, -50, 50) * 1024) / 1024, std::round(uniform(rng, -50, 50) * 1024) / 1024));
    io::write_flo(dir / "f.flo", f);
    const FlowField g = io::read_flo(dir / "f.flo");
    EXPECT_EQ(g.mask(), f.mask());
    EXPECT_EQ(g.values(), f.values());
  }
}

TEST(Flo, Errors) {
  FlowField f(3, 2, Vec2(1, 1), true);
  auto bytes = io::encode_flo(f);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_PPGEO_ERROR(io::decode_flo(truncated), ErrorCode::kSizeMismatch);
  EXPECT_PPGEO_ERROR(io::decode_flo({1, 2}), ErrorCode::kSizeMismatch);
  bytes[0] ^= 0xff;
  EXPECT_PPGEO_ERROR(io::decode_flo(bytes), ErrorCode::kFormat);
}

// ---- raster ---------------------------------------------------------------------

TEST(Raster, RoundTripAndLayout) {
  ScalarGrid g(3, 3);
  g.set(0, 0, -0.125);
  g.set(2, 2, 0.5);
  const auto bytes = io::encode_raster(g);
  EXPECT_EQ(bytes.size(), 16u + 36u + 2u);
  EXPECT_EQ(0, std::memcmp(bytes.data(), "PPGRAST1", 8));
  EXPECT_EQ(bytes[16 + 36], 0x01);
  EXPECT_EQ(bytes[16 + 37], 0x01);
  expect_bitwise_equal(io::decode_raster(bytes), g);
}

TEST(Raster, Errors) {
  ScalarGrid g(4, 4, 1.0, true);
  auto bytes = io::encode_raster(g);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_PPGEO_ERROR(io::decode_raster(truncated), ErrorCode::kSizeMismatch);
  bytes[0] = 'X';
  EXPECT_PPGEO_ERROR(io::decode_raster(bytes), ErrorCode::kFormat);
  EXPECT_PPGEO_ERROR(io::read_raster("/nonexistent/x.raster"), ErrorCode::kIo);
}

// ---- poses ----------------------------------------------------------------------

TEST(Pose, Examples) {
  const RigidMotion id = io::parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 0");
  EXPECT_EQ(id.rotation(), Mat3::Identity());
  EXPECT_EQ(id.translation(), Vec3::Zero());
  const RigidMotion t = io::parse_pose_line("1 0 0 0.5 0 1 0 -2 0 0 1 13.25");
  EXPECT_EQ(t.rotation(), Mat3::Identity());
  EXPECT_EQ(t.translation(), Vec3(0.5, -2, 13.25));
}

TEST(Pose, Errors) {
  EXPECT_PPGEO_ERROR(io::parse_pose_line("1 0 0 0 0 1 0 0 0 0 1"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 x"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 nan"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_pose_line("1 0.1 0 0 0 1 0 0 0 0 1 0"), ErrorCode::kNonRigid);
}

TEST(Pose, SlightlyOffRotationIsReorthonormalized) {
  const RigidMotion m = io::parse_pose_line("1 0.0001 0 0 0 1 0 0 0 0 1 0");
  EXPECT_LT(RigidMotion::orthonormality_error(m.rotation()), 1e-12);
}

TEST(Pose, FileRoundTrip) {
  std::mt19937_64 rng(3);
  TempDir dir;
  std::vector<RigidMotion> poses;
  for (int i = 0; i < 50; ++i)
    poses.emplace_back(test::random_rotation(rng, M_PI), test::uniform_vec(rng, -100, 100));
  io::write_pose_kitti(dir / "poses.txt", poses);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const RigidMotion r = io::read_pose_kitti(dir / "poses.txt", i);
    EXPECT_EQ(r.rotation(), poses[i].rotation());
    EXPECT_EQ(r.translation(), poses[i].translation());
  }
  EXPECT_PPGEO_ERROR(io::read_pose_kitti(dir / "poses.txt", 50), ErrorCode::kParse);
}

TEST(RelativeMotion, SamePoseIsIdentity) {
  std::mt19937_64 rng(4);
  const RigidMotion a(test::random_rotation(rng, M_PI), test::uniform_vec(rng, -10, 10));
  const RigidMotion r = io::relative_motion(a, a);
  EXPECT_TRUE(r.rotation().isApprox(Mat3::Identity(), 1e-14));
  EXPECT_LT(r.translation().norm(), 1e-13);
}

// Camera b sits 1 m ahead of a: a world point seen by both must agree once
// mapped through the relative motion.
TEST(RelativeMotion, ForwardStepByCommonPoint) {
  std::mt19937_64 rng(5);
  const RigidMotion a(test::random_rotation(rng, M_PI), test::uniform_vec(rng, -10, 10));
  const RigidMotion b(a.rotation(), a.translation() + a.rotation() * Vec3(0, 0, 1));
  const RigidMotion r = io::relative_motion(a, b);
  EXPECT_TRUE(r.translation().isApprox(Vec3(0, 0, -1), 1e-12));
  const Vec3 world = a.apply(Vec3(0.5, -0.3, 12.0));
  const Vec3 in_a = a.inverse().apply(world);
  const Vec3 in_b = b.inverse().apply(world);
  EXPECT_TRUE(r.apply(in_a).isApprox(in_b, 1e-12));
}

TEST(RelativeMotion, Composition) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const RigidMotion a(test::random_rotation(rng, M_PI), test::uniform_vec(rng, -10, 10));
    const RigidMotion b(test::random_rotation(rng, M_PI), test::uniform_vec(rng, -10, 10));
    const RigidMotion c(test::random_rotation(rng, M_PI), test::uniform_vec(rng, -10, 10));
    const RigidMotion ac = io::relative_motion(a, c);
    const RigidMotion composed = io::relative_motion(b, c) * io::relative_motion(a, b);
    EXPECT_LT((ac.rotation() - composed.rotation()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((ac.translation() - composed.translation()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

// ---- text formats -------------------------------------------------------------------

TEST(PlaneFile, RoundTripAndErrors) {
  const PlaneModel p(Vec3(0.01, 0.999, 0.03), 1.6512);
  const PlaneModel q = io::parse_plane(io::format_plane(p));
  // The constructor renormalizes, which may move the normal by an ulp.
  EXPECT_LT((q.normal() - p.normal()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(q.camera_height(), p.camera_height());
  EXPECT_PPGEO_ERROR(io::parse_plane("normal=[0,1,0]\n"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_plane("normal=[0,2,0]\ncamera_height=1\n"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_plane("normal=[0,1,0]\ncamera_height=1\ncolor=red\n"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_plane("normal=[0,1,0]\ncamera_height=-1\n"), ErrorCode::kInvalidArgument);
}

TEST(IntrinsicsFile, RoundTrip) {
  const CameraIntrinsics K(721.5377, 721.5377, 609.5593, 172.854);
  EXPECT_EQ(io::parse_intrinsics(io::format_intrinsics(K)), K);
  EXPECT_PPGEO_ERROR(io::parse_intrinsics("fx=1\nfy=1\ncx=0\n"), ErrorCode::kParse);
}

TEST(XyzFile, RoundTrip) {
  PointCloud c;
  c.points = {Vec3(1, 2, 3), Vec3(-0.5, 0.25, 9)};
  c.normals = {Vec3(0, 0, -1), Vec3(0, -1, 0)};
  const PointCloud d = io::parse_xyz(io::format_xyz(c));
  EXPECT_EQ(d.points, c.points);
  EXPECT_EQ(d.normals, c.normals);
  EXPECT_PPGEO_ERROR(io::parse_xyz("1 2\n"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_xyz("1 2 3\n1 2 3 0 0 1\n"), ErrorCode::kParse);
}

TEST(SceneFile, RoundTrip) {
  io::SceneSpec s;
  s.width = 64;
  s.height = 32;
  s.camera_angles_deg = Vec3(3, 1, 0);
  s.motion_translation = Vec3(0, 0, -0.75);
  s.scene.objects.push_back({Vec3(10, 0, 1), Vec3(2, 2, 2)});
  const io::SceneSpec t = io::parse_scene(io::format_scene(s));
  EXPECT_EQ(io::format_scene(t), io::format_scene(s));
  EXPECT_PPGEO_ERROR(io::parse_scene("image_size=[4,4]\n"), ErrorCode::kFormat);
  EXPECT_PPGEO_ERROR(io::parse_scene("schema=ppgeo-scene/2\n"), ErrorCode::kFormat);
  EXPECT_PPGEO_ERROR(io::parse_scene("schema=ppgeo-scene/1\nwobble=1\n"), ErrorCode::kParse);
  EXPECT_PPGEO_ERROR(io::parse_scene("schema=ppgeo-scene/1\nbox center=[1,1,1]\n"), ErrorCode::kParse);
}

TEST(SceneFile, SourcePlaneFollowsMotion) {
  io::SceneSpec s;
  s.motion_translation = Vec3(0.1, -0.2, -0.75);
  s.motion_rotation_deg = Vec3(0, 1.5, 0);
  const PlaneModel tgt = s.target_plane();
  const PlaneModel src = s.source_plane();
  // A ground point in the source frame maps onto the target plane.
  const Vec3 P_s = src.camera_height() * src.normal() + 4.0 * src.normal().unitOrthogonal();
  EXPECT_NEAR(tgt.height_of(s.motion().apply(P_s)), 0.0, 1e-12);
}

TEST(Config, ParsesAndRejects) {
  const io::ToolConfig c = io::parse_config(
      "ransac.iterations=42\nransac.seed=9\nepipole.min_distance=5\nloss.w_depth=0\neval.crop=garg\n"
      "icp.max_iterations=7\n");
  EXPECT_EQ(c.ransac.iterations, 42);
  EXPECT_EQ(c.ransac.rng_seed, 9u);
  EXPECT_EQ(c.epipole_policy.min_epipole_dist, 5.0);
  EXPECT_EQ(c.loss_weights.w_depth, 0.0);
  EXPECT_TRUE(c.eval_range.garg_crop);
  EXPECT_EQ(c.icp.max_iterations, 7);
  EXPECT_PPGEO_ERROR(io::parse_config("ransac.iters=3\n"), ErrorCode::kConfig);
  EXPECT_PPGEO_ERROR(io::parse_config("epipole.max_gamma_factor=1.5\n"), ErrorCode::kConfig);
  EXPECT_PPGEO_ERROR(io::parse_config("eval.crop=eigen\n"), ErrorCode::kConfig);
}

TEST(Manifest, ResolvesAndValidatesFrames) {
  TempDir dir;
  ScalarGrid d(4, 4, 12.5, true);
  io::write_depth_png16(dir / "d.png", d);
  io::write_pose_kitti(dir / "poses.txt", {RigidMotion{}, RigidMotion(Mat3::Identity(), Vec3(0, 0, 1))});
  io::write_plane(dir / "plane.txt", PlaneModel(Vec3::UnitY(), 1.65));
  io::write_intrinsics(dir / "calib.txt", CameraIntrinsics(700, 700, 2, 2));
  io::write_atomic(dir / "m.txt", std::string("frame id=000001 depth=d.png pose=poses.txt pose_line=1 "
                                              "plane=plane.txt intrinsics=calib.txt\n"));
  const auto frames = io::read_manifest(dir / "m.txt");
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].image_id, "000001");
  EXPECT_EQ(frames[0].pose().translation(), Vec3(0, 0, 1));
  EXPECT_EQ(frames[0].depth()(1, 1), 12.5);

  io::write_atomic(dir / "bad.txt", std::string("frame id=2 depth=missing.png pose=poses.txt "
                                                "plane=plane.txt intrinsics=calib.txt\n"));
  EXPECT_PPGEO_ERROR(io::read_manifest(dir / "bad.txt"), ErrorCode::kIo);
}

TEST(WriteAtomic, ReplacesWholeFile) {
  TempDir dir;
  io::write_atomic(dir / "a.txt", std::string("first version, long\n"));
  io::write_atomic(dir / "a.txt", std::string("second\n"));
  EXPECT_EQ(io::read_text(dir / "a.txt"), "second\n");
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    EXPECT_EQ(e.path().filename(), "a.txt");
}

}  // namespace
}  // namespace ppgeo
