// ppgeo: command-line front end for the planar-parallax geometry toolkit.
//
// Every command prints a short human-readable table followed by a single JSON
// line (the machine-readable record). Exit codes: 0 success, 1 runtime error,
// 2 usage error, 3 gamma recovery skipped because t_z = 0.

#include <glob.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ppgeo/ppgeo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppgeo;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSkipped = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  io::ToolConfig config() const {
    io::ToolConfig c = config_path.empty() ? io::ToolConfig{} : io::read_config(config_path);
    if (seed) c.ransac.rng_seed = *seed;
    return c;
  }
  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Tool configuration file (key=value)");
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
}

class Table {
 public:
  void row(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void row(const std::string& key, double value) {
    std::ostringstream s;
    s << std::setprecision(10) << value;
    row(key, s.str());
  }
  void row(const std::string& key, std::size_t value) { row(key, std::to_string(value)); }

  void print(std::ostream& os) const {
    std::size_t width = 0;
    for (const auto& r : rows_) width = std::max(width, r.first.size());
    for (const auto& r : rows_) os << std::left << std::setw(static_cast<int>(width) + 2) << r.first << r.second << "\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

void emit(const Table& table, const json& record) {
  table.print(std::cout);
  std::cout << record.dump() << std::endl;
}

json plane_json(const PlaneModel& p) {
  return {{"normal", {p.normal().x(), p.normal().y(), p.normal().z()}},
          {"camera_height", p.camera_height()}};
}

json motion_json(const RigidMotion& m) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back({m.rotation()(i, 0), m.rotation()(i, 1), m.rotation()(i, 2)});
  return {{"rotation", r},
          {"translation", {m.translation().x(), m.translation().y(), m.translation().z()}}};
}

std::string vec_str(const Vec3& v) { return io::format_vec3(v); }

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string scene;
  std::string out;
  double noise = 0.0;
};

int run_synth(const SynthArgs& a) {
  a.common.config();
  const io::SceneSpec spec = io::read_scene(a.scene);
  const auto& K = spec.intrinsics;
  const RigidMotion pose = spec.target_pose();
  const RigidMotion motion = spec.motion();
  const PlaneModel target_plane = spec.target_plane();
  const PlaneModel source_plane = spec.source_plane();

  const RenderedFrame frame = render(spec.scene, K, pose, spec.width, spec.height);
  FlowField flow =
      render_residual_flow(spec.scene, K, pose, motion, source_plane, spec.width, spec.height);
  if (a.noise > 0.0) flow = perturb_flow(flow, a.noise, a.common.seed_or(0));
  const ScalarGrid ppe = ppe_map(K, target_plane, spec.width, spec.height);

  // 16-bit PNG depth only covers up to 65535 / 256 m.
  ScalarGrid png_depth = frame.depth;
  for (std::size_t i = 0; i < png_depth.size(); ++i)
    if (png_depth.valid(i) && std::round(png_depth[i] * 256.0) > 65535.0) png_depth.set_valid(i, false);

  ScalarGrid hits(spec.width, spec.height, 0.0, true);
  std::size_t n_ground = 0, n_object = 0, n_sky = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const auto kind = frame.hits[i];
    hits[i] = static_cast<double>(kind);
    n_ground += kind == HitKind::kGround;
    n_object += kind == HitKind::kObject;
    n_sky += kind == HitKind::kSky;
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  io::write_depth_png16(dir / "depth.png", png_depth);
  io::write_raster(dir / "depth.raster", frame.depth);
  io::write_raster(dir / "height.raster", frame.height);
  io::write_raster(dir / "gamma.raster", frame.gamma);
  io::write_raster(dir / "ppe.raster", ppe);
  io::write_raster(dir / "hits.raster", hits);
  io::write_flo(dir / "flow.flo", flow);
  io::write_plane(dir / "plane.txt", target_plane);
  io::write_plane(dir / "source_plane.txt", source_plane);
  io::write_intrinsics(dir / "intrinsics.txt", K);
  io::write_pose_kitti(dir / "motion.txt", {motion});

  Table t;
  t.row("output", dir.string());
  t.row("size", std::to_string(spec.width) + "x" + std::to_string(spec.height));
  t.row("ground pixels", n_ground);
  t.row("object pixels", n_object);
  t.row("sky pixels", n_sky);
  t.row("flow pixels", flow.mask().count());
  t.row("t_z", motion.translation().z());
  json rec = {{"command", "synth"},
              {"output", dir.string()},
              {"width", spec.width},
              {"height", spec.height},
              {"ground_pixels", n_ground},
              {"object_pixels", n_object},
              {"sky_pixels", n_sky},
              {"flow_pixels", flow.mask().count()},
              {"noise_sigma", a.noise},
              {"plane", plane_json(target_plane)},
              {"source_plane", plane_json(source_plane)},
              {"motion", motion_json(motion)}};
  if (std::abs(motion.translation().z()) > tol::kSingular) {
    const PixelPoint e = epipole(K, motion.translation());
    t.row("epipole", "(" + io::format_double(e.u) + ", " + io::format_double(e.v) + ")");
    rec["epipole"] = {e.u, e.v};
  } else {
    t.row("epipole", "at infinity (t_z = 0)");
    rec["epipole"] = nullptr;
  }
  emit(t, rec);
  return 0;
}

// ---- warp -------------------------------------------------------------------

struct WarpArgs {
  Common common;
  std::string depth;
  std::string pose;
  std::size_t pose_line = 0;
  std::string plane;
  std::string intrinsics;
  std::string height;
  std::string out;
  double ground_tol = 0.01;
};

int run_warp(const WarpArgs& a) {
  const io::ToolConfig cfg = a.common.config();
  const ScalarGrid depth = io::read_depth(a.depth);
  const RigidMotion motion = io::read_pose_kitti(a.pose, a.pose_line);
  const PlaneModel target_plane = io::read_plane(a.plane);
  const PlaneModel source_plane = transform_plane(target_plane, motion.inverse());
  const CameraIntrinsics K = io::read_intrinsics(a.intrinsics);
  const Homography H = homography_from_motion(K, motion, source_plane);
  std::optional<ScalarGrid> heights;
  if (!a.height.empty()) {
    heights = io::read_raster(a.height);
    require(heights->same_shape(depth), ErrorCode::kShapeMismatch, "height and depth sizes differ");
  }

  const FlowField field = planar_warp_field(H, depth.width(), depth.height());
  if (!a.out.empty()) io::write_flo(a.out, field);

  const double t_z = motion.translation().z();
  const bool lateral = !(std::abs(t_z) > tol::kSingular);
  const double h_src = source_plane.camera_height();
  const Vec3 t = K.matrix() * motion.translation();
  const PixelPoint e_t = lateral ? PixelPoint{} : epipole(K, motion.translation());
  const RigidMotion to_source = motion.inverse();

  CompensatedSum ground_sq, object_norm;
  std::size_t n_ground = 0, n_object = 0, n_compared = 0;
  double object_max = 0.0, eq_max_abs = 0.0, eq_max_rel = 0.0;

  for_each_pixel(depth.width(), depth.height(), [&](int x, int y) {
    if (!depth.valid(x, y)) return;
    const PixelPoint p_t{static_cast<double>(x), static_cast<double>(y)};
    const Vec3 ray = K.ray(p_t);
    const double z_measured = depth(x, y);
    const double h = heights ? (*heights)(x, y) : target_plane.height_of(z_measured * ray);
    if (heights && !heights->valid(x, y)) return;
    const bool ground = std::abs(h) <= a.ground_tol;
    // Ground pixels are lifted onto the reference plane itself so the check
    // measures the homography rather than depth quantization.
    const double ppe = target_plane.normal().dot(ray);
    if (ground && !(ppe > tol::kHorizon)) return;
    const double z = ground ? target_plane.camera_height() / ppe : z_measured;
    const Vec3 P_s = to_source.apply(z * ray);
    if (!(P_s.z() > 0.0)) return;
    const Vec3 q = H.matrix * K.project(P_s).homogeneous();
    if (!(std::abs(q.z()) >= tol::kSingular)) return;
    const Vec2 u = Vec2(q.x() / q.z(), q.y() / q.z()) - p_t.vec();
    if (ground) {
      ground_sq.add(u.squaredNorm());
      ++n_ground;
      return;
    }
    ++n_object;
    object_norm.add(u.norm());
    object_max = std::max(object_max, u.norm());
    const double gamma = h / z;
    Vec2 predicted;
    if (lateral) {
      predicted = residual_flow_forward_lateral(gamma, t, h_src);
    } else {
      if (std::abs(gamma * t_z / h_src) > cfg.epipole_policy.max_gamma_factor) return;
      predicted = residual_flow_forward(gamma, p_t, e_t, t_z, h_src);
    }
    const double diff = (u - predicted).norm();
    eq_max_abs = std::max(eq_max_abs, diff);
    eq_max_rel = std::max(eq_max_rel, diff / std::max(1.0, u.norm()));
    ++n_compared;
  });

  const double ground_rms = n_ground ? std::sqrt(ground_sq.value() / n_ground) : 0.0;
  const double object_mean = n_object ? object_norm.value() / n_object : 0.0;
  Table tb;
  tb.row("ground pixels", n_ground);
  tb.row("ground residual rms [px]", ground_rms);
  tb.row("object pixels", n_object);
  tb.row("object residual mean [px]", object_mean);
  tb.row("object residual max [px]", object_max);
  tb.row("closed-form pixels", n_compared);
  tb.row("closed-form max diff [px]", eq_max_abs);
  tb.row("branch", lateral ? "lateral (t_z = 0)" : "forward (t_z != 0)");
  json rec = {{"command", "warp"},
              {"ground_pixels", n_ground},
              {"ground_rms", ground_rms},
              {"object_pixels", n_object},
              {"object_mean", object_mean},
              {"object_max", object_max},
              {"closed_form_pixels", n_compared},
              {"closed_form_max_abs", eq_max_abs},
              {"closed_form_max_rel", eq_max_rel},
              {"lateral", lateral},
              {"warp_field_pixels", field.mask().count()}};
  if (!a.out.empty()) rec["warp_field"] = a.out;
  emit(tb, rec);
  return 0;
}

// ---- fit-plane / mean-plane ----------------------------------------------------

struct FitPlaneArgs {
  Common common;
  std::string depth;
  std::string intrinsics;
  std::string out;
};

int run_fit_plane(const FitPlaneArgs& a) {
  const io::ToolConfig cfg = a.common.config();
  const ScalarGrid depth = io::read_depth(a.depth);
  const CameraIntrinsics K = io::read_intrinsics(a.intrinsics);
  const PointCloud cloud = backproject_depth(depth, K);
  const RansacResult r = ransac_plane_fit(cloud, cfg.ransac);
  if (!a.out.empty()) io::write_plane(a.out, r.plane);
  Table t;
  t.row("points", cloud.size());
  t.row("normal", vec_str(r.plane.normal()));
  t.row("camera_height", r.plane.camera_height());
  t.row("inlier fraction", r.inlier_fraction());
  emit(t, {{"command", "fit-plane"},
           {"points", cloud.size()},
           {"plane", plane_json(r.plane)},
           {"inliers", r.inlier_count},
           {"inlier_fraction", r.inlier_fraction()}});
  return 0;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw Error(ErrorCode::kIo, "glob failed for " + pattern);
  return out;
}

struct MeanPlaneArgs {
  Common common;
  std::string pattern;
  std::string out;
};

int run_mean_plane(const MeanPlaneArgs& a) {
  a.common.config();
  const auto files = expand_glob(a.pattern);
  if (files.empty()) throw Error(ErrorCode::kIo, "no plane files match " + a.pattern);
  std::vector<PlaneModel> planes;
  for (const auto& f : files) planes.push_back(io::read_plane(f));
  const PlaneModel m = mean_plane(planes);
  if (!a.out.empty()) io::write_plane(a.out, m);
  Table t;
  t.row("planes", planes.size());
  t.row("normal", vec_str(m.normal()));
  t.row("camera_height", m.camera_height());
  emit(t, {{"command", "mean-plane"}, {"planes", planes.size()}, {"plane", plane_json(m)}});
  return 0;
}

// ---- icp-refine -------------------------------------------------------------

struct IcpArgs {
  Common common;
  std::string source;
  std::string target;
  std::string init;
  std::size_t init_line = 0;
  std::string intrinsics;
  std::string out;
};

PointCloud load_cloud(const std::string& path, const std::string& intrinsics, bool with_normals) {
  const fs::path p(path);
  if (p.extension() == ".xyz") return io::read_xyz(p);
  if (intrinsics.empty())
    throw Error(ErrorCode::kInvalidArgument, "depth clouds need --intrinsics");
  const ScalarGrid depth = io::read_depth(p);
  const CameraIntrinsics K = io::read_intrinsics(intrinsics);
  return with_normals ? backproject_depth_with_normals(depth, K) : backproject_depth(depth, K);
}

int run_icp(const IcpArgs& a) {
  const io::ToolConfig cfg = a.common.config();
  const PointCloud src = load_cloud(a.source, a.intrinsics, false);
  const PointCloud tgt = load_cloud(a.target, a.intrinsics, true);
  const RigidMotion init = a.init.empty() ? RigidMotion{} : io::read_pose_kitti(a.init, a.init_line);
  const IcpResult r = icp_point_to_plane(src, tgt, init, cfg.icp);
  if (!a.out.empty()) io::write_pose_kitti(a.out, {r.motion});
  Table t;
  t.row("iterations", static_cast<std::size_t>(r.iterations));
  t.row("converged", r.converged ? "yes" : "no");
  t.row("initial rms [m]", r.initial_residual());
  t.row("final rms [m]", r.final_residual());
  t.row("motion", io::format_pose_line(r.motion));
  emit(t, {{"command", "icp-refine"},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"residual_trace", r.residual_trace},
           {"motion", motion_json(r.motion)}});
  return 0;
}

// ---- flow2gamma / gamma2depth -------------------------------------------------

struct FlowToGammaArgs {
  Common common;
  std::string flow;
  std::string motion;
  std::size_t motion_line = 0;
  std::string plane;
  std::string intrinsics;
  std::string out;
};

int run_flow2gamma(const FlowToGammaArgs& a) {
  const io::ToolConfig cfg = a.common.config();
  const FlowField flow = io::read_flo(a.flow);
  const RigidMotion motion = io::read_pose_kitti(a.motion, a.motion_line);
  const PlaneModel target_plane = io::read_plane(a.plane);
  const PlaneModel source_plane = transform_plane(target_plane, motion.inverse());
  const CameraIntrinsics K = io::read_intrinsics(a.intrinsics);
  const double t_z = motion.translation().z();
  if (!(std::abs(t_z) > tol::kSingular)) {
    std::cerr << "lateral-motion: t_z = 0, the epipole is at infinity and gamma cannot be "
                 "recovered from residual flow; no output written\n";
    Table t;
    t.row("status", "skipped (t_z = 0)");
    emit(t, {{"command", "flow2gamma"}, {"status", "skipped"}, {"reason", "lateral-motion"}});
    return kExitSkipped;
  }
  const PixelPoint e = epipole(K, motion.translation());
  const GammaMapResult r =
      gamma_map_from_flow(flow, e, t_z, source_plane.camera_height(), cfg.epipole_policy);
  io::write_raster(a.out, r.gamma);
  Table t;
  t.row("epipole", "(" + io::format_double(e.u) + ", " + io::format_double(e.v) + ")");
  t.row("input pixels", r.input_valid);
  t.row("near epipole", r.near_epipole);
  t.row("extreme factor", r.extreme_factor);
  t.row("output pixels", r.output_valid());
  t.row("masked fraction", r.masked_fraction());
  emit(t, {{"command", "flow2gamma"},
           {"status", "ok"},
           {"epipole", {e.u, e.v}},
           {"input_pixels", r.input_valid},
           {"near_epipole", r.near_epipole},
           {"extreme_factor", r.extreme_factor},
           {"output_pixels", r.output_valid()},
           {"masked_fraction", r.masked_fraction()},
           {"output", a.out}});
  return 0;
}

struct GammaToDepthArgs {
  Common common;
  std::string gamma;
  std::string plane;
  std::string intrinsics;
  std::string out;
};

int run_gamma2depth(const GammaToDepthArgs& a) {
  a.common.config();
  const ScalarGrid gamma = io::read_raster(a.gamma);
  const PlaneModel plane = io::read_plane(a.plane);
  const CameraIntrinsics K = io::read_intrinsics(a.intrinsics);
  const ScalarGrid ppe = ppe_map(K, plane, gamma.width(), gamma.height());
  const ScalarGrid depth = depth_from_gamma_map(gamma, ppe, plane.camera_height());
  io::write_raster(a.out, depth);
  const std::size_t in = gamma.mask().count();
  const std::size_t out = depth.mask().count();
  Table t;
  t.row("input pixels", in);
  t.row("output pixels", out);
  t.row("above horizon", in - out);
  emit(t, {{"command", "gamma2depth"},
           {"input_pixels", in},
           {"output_pixels", out},
           {"above_horizon", in - out},
           {"output", a.out}});
  return 0;
}

// ---- eval / loss --------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string pred;
  std::string gt;
  std::string height_mask;
  double max_height = 1.0;
  std::string report;
};

int run_eval(const EvalArgs& a) {
  const io::ToolConfig cfg = a.common.config();
  const ScalarGrid pred = io::read_depth(a.pred);
  const ScalarGrid gt = io::read_depth(a.gt);
  require(pred.same_shape(gt), ErrorCode::kShapeMismatch, "prediction and ground truth sizes differ");
  Mask mask = evaluation_mask(gt, cfg.eval_range);
  if (!a.height_mask.empty()) {
    const ScalarGrid h = io::read_raster(a.height_mask);
    require(h.same_shape(gt), ErrorCode::kShapeMismatch, "height raster size differs");
    mask = mask & height_mask(h, a.max_height);
  }
  const MetricReport m = depth_metrics(clamp_depth(pred, cfg.eval_range), gt, mask);
  if (!a.report.empty()) {
    std::ostringstream s;
    s << m;
    io::write_atomic(a.report, s.str());
  }
  Table t;
  t.row("abs_rel", m.abs_rel);
  t.row("sq_rel", m.sq_rel);
  t.row("rmse", m.rmse);
  t.row("rmse_log", m.rmse_log);
  t.row("delta1", m.delta1);
  t.row("delta2", m.delta2);
  t.row("delta3", m.delta3);
  t.row("pixels", m.pixel_count);
  emit(t, {{"command", "eval"},
           {"abs_rel", m.abs_rel},
           {"sq_rel", m.sq_rel},
           {"rmse", m.rmse},
           {"rmse_log", m.rmse_log},
           {"delta1", m.delta1},
           {"delta2", m.delta2},
           {"delta3", m.delta3},
           {"pixel_count", m.pixel_count}});
  return 0;
}

struct LossArgs {
  Common common;
  std::string pred;
  std::string gt;
  std::string plane;
  std::string intrinsics;
};

int run_loss(const LossArgs& a) {
  const io::ToolConfig cfg = a.common.config();
  const ScalarGrid pred = io::read_raster(a.pred);
  const ScalarGrid gt = io::read_raster(a.gt);
  const PlaneModel plane = io::read_plane(a.plane);
  const CameraIntrinsics K = io::read_intrinsics(a.intrinsics);
  const ScalarGrid ppe = ppe_map(K, plane, gt.width(), gt.height());
  const LossBreakdown l = loss_breakdown(pred, gt, ppe, plane.camera_height(), cfg.loss_weights);
  Table t;
  t.row("gamma l1", l.gamma);
  t.row("silog", l.depth);
  t.row("total", l.total);
  emit(t, {{"command", "loss"},
           {"gamma_l1", l.gamma},
           {"silog", l.depth},
           {"total", l.total},
           {"weights",
            {{"w_gamma", cfg.loss_weights.w_gamma},
             {"w_depth", cfg.loss_weights.w_depth},
             {"lambda", cfg.loss_weights.lambda},
             {"alpha", cfg.loss_weights.alpha}}}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar-parallax depth geometry toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Render oracle rasters for a scene file");
  add_common(c_synth, synth.common);
  c_synth->add_option("--scene", synth.scene)->required();
  c_synth->add_option("--out", synth.out)->required();
  c_synth->add_option("--noise", synth.noise, "Gaussian flow noise sigma [px]")->check(CLI::NonNegativeNumber);

  WarpArgs warp;
  auto* c_warp = app.add_subcommand("warp", "Planar warp field and plane-alignment residuals");
  add_common(c_warp, warp.common);
  c_warp->add_option("--image-depth", warp.depth)->required();
  c_warp->add_option("--pose", warp.pose, "Source-to-target motion (KITTI line)")->required();
  c_warp->add_option("--pose-line", warp.pose_line);
  c_warp->add_option("--plane", warp.plane, "Reference plane in the target frame")->required();
  c_warp->add_option("--intrinsics", warp.intrinsics)->required();
  c_warp->add_option("--height", warp.height, "Height raster used to label ground pixels");
  c_warp->add_option("--ground-tol", warp.ground_tol, "Ground label tolerance [m]");
  c_warp->add_option("--out", warp.out, "Write the planar warp field (.flo)");

  FitPlaneArgs fit;
  auto* c_fit = app.add_subcommand("fit-plane", "RANSAC plane from a depth map");
  add_common(c_fit, fit.common);
  c_fit->add_option("--depth", fit.depth)->required();
  c_fit->add_option("--intrinsics", fit.intrinsics)->required();
  c_fit->add_option("--out", fit.out);

  MeanPlaneArgs mean;
  auto* c_mean = app.add_subcommand("mean-plane", "Average plane files");
  add_common(c_mean, mean.common);
  c_mean->add_option("--planes", mean.pattern, "Glob pattern of plane files")->required();
  c_mean->add_option("--out", mean.out);

  IcpArgs icp;
  auto* c_icp = app.add_subcommand("icp-refine", "Point-to-plane ICP between two clouds");
  add_common(c_icp, icp.common);
  c_icp->add_option("--src", icp.source, ".xyz cloud or depth map")->required();
  c_icp->add_option("--tgt", icp.target, ".xyz cloud with normals or depth map")->required();
  c_icp->add_option("--init", icp.init, "Initial motion (KITTI line)");
  c_icp->add_option("--init-line", icp.init_line);
  c_icp->add_option("--intrinsics", icp.intrinsics);
  c_icp->add_option("--out", icp.out);

  FlowToGammaArgs f2g;
  auto* c_f2g = app.add_subcommand("flow2gamma", "Gamma from residual flow");
  add_common(c_f2g, f2g.common);
  c_f2g->add_option("--flow", f2g.flow)->required();
  c_f2g->add_option("--motion", f2g.motion)->required();
  c_f2g->add_option("--motion-line", f2g.motion_line);
  c_f2g->add_option("--plane", f2g.plane, "Reference plane in the target frame")->required();
  c_f2g->add_option("--intrinsics", f2g.intrinsics)->required();
  c_f2g->add_option("--out", f2g.out)->required();

  GammaToDepthArgs g2d;
  auto* c_g2d = app.add_subcommand("gamma2depth", "Depth from gamma");
  add_common(c_g2d, g2d.common);
  c_g2d->add_option("--gamma", g2d.gamma)->required();
  c_g2d->add_option("--plane", g2d.plane)->required();
  c_g2d->add_option("--intrinsics", g2d.intrinsics)->required();
  c_g2d->add_option("--out", g2d.out)->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Depth metrics");
  add_common(c_eval, ev.common);
  c_eval->add_option("--pred", ev.pred)->required();
  c_eval->add_option("--gt", ev.gt)->required();
  c_eval->add_option("--height-mask", ev.height_mask, "Height raster; keeps pixels below --max-height");
  c_eval->add_option("--max-height", ev.max_height);
  c_eval->add_option("--report", ev.report, "Write key=value metric record");

  LossArgs loss;
  auto* c_loss = app.add_subcommand("loss", "Gamma L1, SILog and weighted total loss");
  add_common(c_loss, loss.common);
  c_loss->add_option("--pred-gamma", loss.pred)->required();
  c_loss->add_option("--gt-gamma", loss.gt)->required();
  c_loss->add_option("--plane", loss.plane)->required();
  c_loss->add_option("--intrinsics", loss.intrinsics)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_warp->parsed()) return run_warp(warp);
    if (c_fit->parsed()) return run_fit_plane(fit);
    if (c_mean->parsed()) return run_mean_plane(mean);
    if (c_icp->parsed()) return run_icp(icp);
    if (c_f2g->parsed()) return run_flow2gamma(f2g);
    if (c_g2d->parsed()) return run_gamma2depth(g2d);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_loss->parsed()) return run_loss(loss);
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
