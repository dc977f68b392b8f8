#pragma once

// Scene description files. Example:
//
//   schema=ppgeo-scene/1
//   image_size=[320,160]
//   intrinsics=[160,160,160,60]      # fx, fy, cx, cy
//   camera_position=[0,0,1.5]        # scene frame, ground at z = 0
//   camera_angles_deg=[0,2,0]        # yaw, pitch, roll
//   motion_translation=[0,0,0.75]    # source -> target, target camera frame
//   motion_rotation_deg=[0,0.5,0]    # rotation vector, degrees
//   sky_depth=inf
//   box center=[12,0.5,0.75] extents=[2,1.8,1.5]
//
// The motion maps source-camera coordinates to target-camera coordinates; the
// rendered view is the target.

#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>

#include "ppgeo/io/text.hpp"
#include "ppgeo/synthetic.hpp"

namespace ppgeo::io {

inline constexpr std::string_view kSceneSchema = "ppgeo-scene/1";

struct SceneSpec {
  SyntheticScene scene;
  CameraIntrinsics intrinsics{100.0, 100.0, 50.0, 50.0};
  int width = 100;
  int height = 100;
  Vec3 camera_position{0.0, 0.0, 1.5};
  Vec3 camera_angles_deg = Vec3::Zero();
  Vec3 motion_translation = Vec3::Zero();
  Vec3 motion_rotation_deg = Vec3::Zero();

  RigidMotion target_pose() const {
    const Vec3 a = camera_angles_deg * M_PI / 180.0;
    return camera_pose(camera_position, a.x(), a.y(), a.z());
  }

  RigidMotion motion() const {
    const Vec3 w = motion_rotation_deg * M_PI / 180.0;
    const double angle = w.norm();
    const Mat3 r = angle == 0.0 ? Mat3::Identity()
                                : Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
    return {r, motion_translation};
  }

  PlaneModel target_plane() const { return ground_plane_in_camera(target_pose()); }

  /// Reference plane expressed in the source camera frame.
  PlaneModel source_plane() const { return transform_plane(target_plane(), motion().inverse()); }
};

inline SceneSpec parse_scene(std::string_view text) {
  SceneSpec spec;
  bool schema_seen = false;
  for (const auto& rec : parse_records(text)) {
    const std::string where = "scene line " + std::to_string(rec.line) + ": ";
    if (rec.tag == "box") {
      KeyValues kv(rec.fields);
      Box b{parse_vec3(kv.take("center")), parse_vec3(kv.take("extents"))};
      kv.reject_unknown();
      spec.scene.objects.push_back(b);
      continue;
    }
    if (!rec.tag.empty()) throw Error(ErrorCode::kParse, where + "unknown record " + rec.tag);
    for (const auto& [key, value] : rec.fields) {
      if (key == "schema") {
        if (value != kSceneSchema) throw Error(ErrorCode::kFormat, where + "unsupported schema " + value);
        schema_seen = true;
      } else if (key == "image_size") {
        const auto v = parse_list(value);
        if (v.size() != 2 || v[0] < 1 || v[1] < 1 || v[0] != std::floor(v[0]) ||
            v[1] != std::floor(v[1]))
          throw Error(ErrorCode::kParse, where + "image_size needs two positive integers");
        spec.width = static_cast<int>(v[0]);
        spec.height = static_cast<int>(v[1]);
      } else if (key == "intrinsics") {
        const auto v = parse_list(value);
        if (v.size() != 4) throw Error(ErrorCode::kParse, where + "intrinsics needs fx,fy,cx,cy");
        spec.intrinsics = CameraIntrinsics(v[0], v[1], v[2], v[3]);
      } else if (key == "camera_position") {
        spec.camera_position = parse_vec3(value);
      } else if (key == "camera_angles_deg") {
        spec.camera_angles_deg = parse_vec3(value);
      } else if (key == "motion_translation") {
        spec.motion_translation = parse_vec3(value);
      } else if (key == "motion_rotation_deg") {
        spec.motion_rotation_deg = parse_vec3(value);
      } else if (key == "sky_depth") {
        spec.scene.sky_depth = parse_double(value);
      } else {
        throw Error(ErrorCode::kParse, where + "unknown key " + key);
      }
    }
  }
  if (!schema_seen) throw Error(ErrorCode::kFormat, "scene file lacks schema=" + std::string(kSceneSchema));
  spec.scene.validate();
  ground_plane_in_camera(spec.target_pose());
  return spec;
}

inline std::string format_scene(const SceneSpec& s) {
  std::string out = "schema=" + std::string(kSceneSchema) + "\n";
  out += "image_size=[" + std::to_string(s.width) + "," + std::to_string(s.height) + "]\n";
  out += "intrinsics=[" + format_double(s.intrinsics.fx()) + "," + format_double(s.intrinsics.fy()) +
         "," + format_double(s.intrinsics.cx()) + "," + format_double(s.intrinsics.cy()) + "]\n";
  out += "camera_position=" + format_vec3(s.camera_position) + "\n";
  out += "camera_angles_deg=" + format_vec3(s.camera_angles_deg) + "\n";
  out += "motion_translation=" + format_vec3(s.motion_translation) + "\n";
  out += "motion_rotation_deg=" + format_vec3(s.motion_rotation_deg) + "\n";
  out += "sky_depth=" + format_double(s.scene.sky_depth) + "\n";
  for (const auto& b : s.scene.objects)
    out += "box center=" + format_vec3(b.center) + " extents=" + format_vec3(b.extents) + "\n";
  return out;
}

inline SceneSpec read_scene(const std::filesystem::path& path) { return parse_scene(read_text(path)); }
inline void write_scene(const std::filesystem::path& path, const SceneSpec& s) {
  write_atomic(path, format_scene(s));
}

}  // namespace ppgeo::io
