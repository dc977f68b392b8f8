// Renders a small road scene, aligns the previous frame with the ground
// homography and recovers gamma and depth from the residual flow.

#include <cstdio>

#include "ppgeo/ppgeo.hpp"

using namespace ppgeo;

int main() {
  const CameraIntrinsics K(250.0, 250.0, 159.5, 79.5);
  const int width = 320, height = 160;

  SyntheticScene scene;
  scene.objects.push_back({Vec3(12.0, -2.0, 0.9), Vec3(4.0, 1.8, 1.8)});
  scene.objects.push_back({Vec3(20.0, 3.5, 1.5), Vec3(2.0, 2.0, 3.0)});

  const RigidMotion pose = camera_pose(Vec3(0.0, 0.0, 1.5));
  const RigidMotion motion(Mat3::Identity(), Vec3(0.0, 0.0, -0.75));
  const PlaneModel target_plane = ground_plane_in_camera(pose);
  const PlaneModel source_plane = transform_plane(target_plane, motion.inverse());

  const RenderedFrame frame = render(scene, K, pose, width, height);
  const FlowField flow = render_residual_flow(scene, K, pose, motion, source_plane, width, height);

  const PixelPoint e = epipole(K, motion.translation());
  const GammaMapResult g =
      gamma_map_from_flow(flow, e, motion.translation().z(), source_plane.camera_height());
  const ScalarGrid ppe = ppe_map(K, target_plane, width, height);
  const ScalarGrid depth = depth_from_gamma_map(g.gamma, ppe, target_plane.camera_height());

  const MetricReport m = depth_metrics(depth, frame.depth, depth.mask() & frame.depth.mask());
  std::printf("epipole          (%.2f, %.2f)\n", e.u, e.v);
  std::printf("gamma pixels     %zu of %zu (%.1f%% masked)\n", g.output_valid(), g.input_valid,
              100.0 * g.masked_fraction());
  std::printf("depth abs_rel    %.3e\n", m.abs_rel);
  std::printf("depth rmse       %.3e m\n", m.rmse);
  return 0;
}
