#pragma once

// Human-readable structured text formats:
//
//  * key=value records, one per line, '#' starts a comment;
//  * vectors written as [x,y,z];
//  * plane files:      normal=[x,y,z] / camera_height=h
//  * intrinsics files: fx= / fy= / cx= / cy=
//  * KITTI pose text:  12 floats per line, row-major 3x4 [R|t]
//  * point clouds:     "x y z" or "x y z nx ny nz" per line

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ppgeo/core_geometry.hpp"
#include "ppgeo/io/files.hpp"
#include "ppgeo/plane_estimation.hpp"

namespace ppgeo::io {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text) {
  const std::string_view s = trim(text);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::kParse, "not a number: '" + std::string(s) + "'");
  return v;
}

inline long parse_integer(std::string_view text) {
  const std::string_view s = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::kParse, "not an integer: '" + std::string(s) + "'");
  return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::vector<double> parse_list(std::string_view text) {
  std::string_view s = trim(text);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw Error(ErrorCode::kParse, "expected [a,b,...], got '" + std::string(s) + "'");
  s = s.substr(1, s.size() - 2);
  std::vector<double> out;
  while (!trim(s).empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_double(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

inline Vec3 parse_vec3(std::string_view text) {
  const auto v = parse_list(text);
  if (v.size() != 3) throw Error(ErrorCode::kParse, "expected three components");
  return {v[0], v[1], v[2]};
}

inline std::string format_vec3(const Vec3& v) {
  return "[" + format_double(v.x()) + "," + format_double(v.y()) + "," + format_double(v.z()) + "]";
}

/// One logical line: an optional leading tag word followed by key=value
/// fields. "camera_height=1.5" has an empty tag and one field; "box
/// center=[..] extents=[..]" has tag "box".
struct Record {
  std::string tag;
  std::map<std::string, std::string> fields;
  int line = 0;
};

inline std::vector<Record> parse_records(std::string_view text) {
  std::vector<Record> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    Record rec;
    rec.line = line_no;
    // Split on whitespace outside brackets.
    std::vector<std::string_view> tokens;
    int depth = 0;
    std::size_t start = std::string_view::npos;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      const char c = i < line.size() ? line[i] : ' ';
      if (c == '[') ++depth;
      if (c == ']') --depth;
      const bool space = (c == ' ' || c == '\t') && depth == 0;
      if (!space && start == std::string_view::npos) start = i;
      if (space && start != std::string_view::npos) {
        tokens.push_back(line.substr(start, i - start));
        start = std::string_view::npos;
      }
    }
    // Allow "key = value" by gluing stray '=' tokens.
    std::vector<std::string> glued;
    for (const auto t : tokens) {
      if (!glued.empty() && (t.front() == '=' || glued.back().back() == '='))
        glued.back() += std::string(t);
      else
        glued.emplace_back(t);
    }
    for (std::size_t i = 0; i < glued.size(); ++i) {
      const auto eq = glued[i].find('=');
      if (eq == std::string::npos) {
        if (i != 0)
          throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": stray token '" +
                                             glued[i] + "'");
        rec.tag = glued[i];
        continue;
      }
      const std::string key(trim(std::string_view(glued[i]).substr(0, eq)));
      const std::string value(trim(std::string_view(glued[i]).substr(eq + 1)));
      if (key.empty())
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": empty key");
      if (!rec.fields.emplace(key, value).second)
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// Flattens untagged records into one key/value map; duplicate keys and
/// tagged records are errors.
inline std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  for (const auto& rec : parse_records(text)) {
    if (!rec.tag.empty())
      throw Error(ErrorCode::kParse, "line " + std::to_string(rec.line) + ": unexpected record '" +
                                         rec.tag + "'");
    for (const auto& [k, v] : rec.fields)
      if (!out.emplace(k, v).second) throw Error(ErrorCode::kParse, "duplicate key " + k);
  }
  return out;
}

/// Looks up and removes `key`; callers reject leftovers as unknown keys.
class KeyValues {
 public:
  explicit KeyValues(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string take(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw Error(ErrorCode::kParse, "missing key " + key);
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  void reject_unknown(ErrorCode code = ErrorCode::kParse) const {
    if (!kv_.empty()) throw Error(code, "unknown key " + kv_.begin()->first);
  }

 private:
  std::map<std::string, std::string> kv_;
};

// ---- planes -----------------------------------------------------------------

inline std::string format_plane(const PlaneModel& plane) {
  return "normal=" + format_vec3(plane.normal()) +
         "\ncamera_height=" + format_double(plane.camera_height()) + "\n";
}

inline PlaneModel parse_plane(std::string_view text) {
  KeyValues kv(parse_key_values(text));
  const Vec3 n = parse_vec3(kv.take("normal"));
  const double h = parse_double(kv.take("camera_height"));
  kv.reject_unknown();
  require(std::abs(n.norm() - 1.0) <= 1e-6, ErrorCode::kParse, "plane normal is not unit length");
  return {n, h};
}

inline PlaneModel read_plane(const std::filesystem::path& path) { return parse_plane(read_text(path)); }
inline void write_plane(const std::filesystem::path& path, const PlaneModel& plane) {
  write_atomic(path, format_plane(plane));
}

// ---- intrinsics -------------------------------------------------------------

inline std::string format_intrinsics(const CameraIntrinsics& K) {
  return "fx=" + format_double(K.fx()) + "\nfy=" + format_double(K.fy()) +
         "\ncx=" + format_double(K.cx()) + "\ncy=" + format_double(K.cy()) + "\n";
}

inline CameraIntrinsics parse_intrinsics(std::string_view text) {
  KeyValues kv(parse_key_values(text));
  const double fx = parse_double(kv.take("fx"));
  const double fy = parse_double(kv.take("fy"));
  const double cx = parse_double(kv.take("cx"));
  const double cy = parse_double(kv.take("cy"));
  kv.reject_unknown();
  return {fx, fy, cx, cy};
}

inline CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  return parse_intrinsics(read_text(path));
}
inline void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& K) {
  write_atomic(path, format_intrinsics(K));
}

// ---- poses ------------------------------------------------------------------

/// Orthonormality deviation accepted on input before re-projection onto SO(3).
inline constexpr double kPoseRigidTolerance = 1e-3;

inline std::string format_pose_line(const RigidMotion& m) {
  std::string s;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) s += format_double(m.rotation()(r, c)) + " ";
    s += format_double(m.translation()(r));
    if (r < 2) s += " ";
  }
  return s;
}

/// Twelve floats, row-major [R|t]. Rotations within 1e-3 of orthonormal are
/// projected onto SO(3) (left untouched when already rigid to 1e-10).
inline RigidMotion parse_pose_line(std::string_view line) {
  std::vector<double> v;
  std::size_t pos = 0;
  const std::string_view s = trim(line);
  while (pos < s.size()) {
    const auto next = s.find_first_of(" \t", pos);
    const auto tok = s.substr(pos, next == std::string_view::npos ? s.npos : next - pos);
    if (!tok.empty()) v.push_back(parse_double(tok));
    if (next == std::string_view::npos) break;
    pos = s.find_first_not_of(" \t", next);
    if (pos == std::string_view::npos) break;
  }
  if (v.size() != 12) throw Error(ErrorCode::kParse, "pose line needs 12 values");
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorCode::kParse, "pose value is not finite");
  Mat3 r;
  r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
  const Vec3 t(v[3], v[7], v[11]);
  const double err = RigidMotion::orthonormality_error(r);
  if (err > kPoseRigidTolerance)
    throw Error(ErrorCode::kNonRigid, "pose rotation is not orthonormal");
  if (err > tol::kRigid) r = RigidMotion::project_to_rotation(r);
  return {r, t};
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!trim(line).empty()) lines.push_back(line);
  return lines;
}

inline RigidMotion read_pose_kitti(const std::filesystem::path& path, std::size_t line_index = 0) {
  const auto lines = read_lines(path);
  if (line_index >= lines.size())
    throw Error(ErrorCode::kParse, "pose file has no line " + std::to_string(line_index));
  return parse_pose_line(lines[line_index]);
}

inline void write_pose_kitti(const std::filesystem::path& path, const std::vector<RigidMotion>& poses) {
  std::string s;
  for (const auto& p : poses) s += format_pose_line(p) + "\n";
  write_atomic(path, s);
}

/// Relative motion between two camera-to-world poses (KITTI odometry
/// convention, P_world = R_i P_i + t_i). The result maps coordinates in
/// camera a to coordinates in camera b: P_b = R P_a + T.
inline RigidMotion relative_motion(const RigidMotion& pose_a, const RigidMotion& pose_b) {
  const Mat3 rbt = pose_b.rotation().transpose();
  return {rbt * pose_a.rotation(), rbt * (pose_a.translation() - pose_b.translation())};
}

// ---- point clouds -----------------------------------------------------------

inline PointCloud parse_xyz(std::string_view text) {
  PointCloud cloud;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  int columns = -1;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::vector<double> v;
    for (std::string tok; ls >> tok;) v.push_back(parse_double(tok));
    if (v.size() != 3 && v.size() != 6)
      throw Error(ErrorCode::kParse, "xyz line " + std::to_string(line_no) + " needs 3 or 6 values");
    if (columns >= 0 && static_cast<int>(v.size()) != columns)
      throw Error(ErrorCode::kParse, "xyz line " + std::to_string(line_no) + " changes column count");
    columns = static_cast<int>(v.size());
    cloud.points.emplace_back(v[0], v[1], v[2]);
    if (columns == 6) {
      const Vec3 n(v[3], v[4], v[5]);
      require(std::abs(n.norm() - 1.0) < 1e-6, ErrorCode::kParse, "xyz normal is not unit length");
      cloud.normals.push_back(n.normalized());
    }
  }
  return cloud;
}

inline std::string format_xyz(const PointCloud& cloud) {
  std::string s;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    s += format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z());
    if (cloud.has_normals()) {
      const auto& n = cloud.normals[i];
      s += " " + format_double(n.x()) + " " + format_double(n.y()) + " " + format_double(n.z());
    }
    s += "\n";
  }
  return s;
}

inline PointCloud read_xyz(const std::filesystem::path& path) { return parse_xyz(read_text(path)); }
inline void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  write_atomic(path, format_xyz(cloud));
}

}  // namespace ppgeo::io
