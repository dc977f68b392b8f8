#pragma once

// Tool configuration (key=value text) and dataset manifests.
//
// Config keys, all optional:
//   ransac.iterations  ransac.inlier_threshold  ransac.min_inlier_fraction  ransac.seed
//   epipole.min_distance  epipole.max_gamma_factor
//   loss.w_gamma  loss.w_depth  loss.lambda  loss.alpha
//   eval.min_depth  eval.max_depth  eval.crop (none | garg)
//   icp.max_iterations  icp.tolerance  icp.max_distance  icp.max_normal_angle_deg
//
// Manifest records, one frame per line, paths relative to the manifest:
//   frame id=000123 depth=depth/000123.png pose=poses.txt pose_line=123
//         plane=planes/000123.txt intrinsics=calib.txt

#include <filesystem>
#include <string>
#include <vector>

#include "ppgeo/io/png16.hpp"
#include "ppgeo/io/raster.hpp"
#include "ppgeo/io/text.hpp"
#include "ppgeo/losses_metrics.hpp"
#include "ppgeo/parallax.hpp"
#include "ppgeo/plane_estimation.hpp"

namespace ppgeo::io {

struct ToolConfig {
  RansacConfig ransac;
  EpipoleMaskPolicy epipole_policy;
  LossWeights loss_weights;
  EvalRange eval_range;
  IcpConfig icp;

  void validate() const {
    ransac.validate();
    epipole_policy.validate();
    loss_weights.validate();
    require(eval_range.min_depth > 0.0 && eval_range.max_depth > eval_range.min_depth,
            ErrorCode::kConfig, "eval depth range is empty");
    require(icp.max_iterations >= 0 && icp.tolerance >= 0.0 && icp.max_correspondence_distance > 0.0,
            ErrorCode::kConfig, "invalid icp settings");
  }
};

inline ToolConfig parse_config(std::string_view text) {
  ToolConfig c;
  KeyValues kv(parse_key_values(text));
  auto num = [&](const char* key, double& out) {
    if (kv.has(key)) out = parse_double(kv.take(key));
  };
  auto integer = [&](const char* key, auto& out) {
    if (kv.has(key)) out = static_cast<std::remove_reference_t<decltype(out)>>(parse_integer(kv.take(key)));
  };
  integer("ransac.iterations", c.ransac.iterations);
  num("ransac.inlier_threshold", c.ransac.inlier_threshold);
  num("ransac.min_inlier_fraction", c.ransac.min_inlier_fraction);
  integer("ransac.seed", c.ransac.rng_seed);
  num("epipole.min_distance", c.epipole_policy.min_epipole_dist);
  num("epipole.max_gamma_factor", c.epipole_policy.max_gamma_factor);
  num("loss.w_gamma", c.loss_weights.w_gamma);
  num("loss.w_depth", c.loss_weights.w_depth);
  num("loss.lambda", c.loss_weights.lambda);
  num("loss.alpha", c.loss_weights.alpha);
  num("eval.min_depth", c.eval_range.min_depth);
  num("eval.max_depth", c.eval_range.max_depth);
  if (kv.has("eval.crop")) {
    const std::string crop = kv.take("eval.crop");
    if (crop == "garg")
      c.eval_range.garg_crop = true;
    else if (crop != "none")
      throw Error(ErrorCode::kConfig, "eval.crop must be none or garg");
  }
  integer("icp.max_iterations", c.icp.max_iterations);
  num("icp.tolerance", c.icp.tolerance);
  num("icp.max_distance", c.icp.max_correspondence_distance);
  num("icp.max_normal_angle_deg", c.icp.max_normal_angle_deg);
  kv.reject_unknown(ErrorCode::kConfig);
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return c;
}

inline ToolConfig read_config(const std::filesystem::path& path) {
  return parse_config(read_text(path));
}

/// Depth maps by extension: .png is 16-bit KITTI depth, anything else the raster format.
inline ScalarGrid read_depth(const std::filesystem::path& path) {
  return path.extension() == ".png" ? read_depth_png16(path) : read_raster(path);
}

struct DatasetFrame {
  std::string image_id;
  std::filesystem::path depth_path;
  std::filesystem::path pose_path;
  std::size_t pose_line = 0;
  std::filesystem::path plane_path;
  CameraIntrinsics intrinsics{1.0, 1.0, 0.0, 0.0};

  ScalarGrid depth() const { return read_depth(depth_path); }
  RigidMotion pose() const { return read_pose_kitti(pose_path, pose_line); }
  PlaneModel plane() const { return read_plane(plane_path); }
};

/// Parses a manifest and checks that every referenced file exists and parses.
inline std::vector<DatasetFrame> read_manifest(const std::filesystem::path& path) {
  const auto base = path.parent_path();
  std::vector<DatasetFrame> frames;
  for (const auto& rec : parse_records(read_text(path))) {
    if (rec.tag != "frame")
      throw Error(ErrorCode::kParse, "manifest line " + std::to_string(rec.line) + ": expected 'frame'");
    KeyValues kv(rec.fields);
    DatasetFrame f;
    f.image_id = kv.take("id");
    f.depth_path = base / kv.take("depth");
    f.pose_path = base / kv.take("pose");
    if (kv.has("pose_line")) f.pose_line = static_cast<std::size_t>(parse_integer(kv.take("pose_line")));
    f.plane_path = base / kv.take("plane");
    f.intrinsics = read_intrinsics(base / kv.take("intrinsics"));
    kv.reject_unknown();
    f.depth();
    f.pose();
    f.plane();
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace ppgeo::io
