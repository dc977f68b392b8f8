#pragma once

// Forward-only training losses on gamma and depth, and the monocular depth
// evaluation metrics. Every reduction honours grid validity and uses
// compensated summation in row-major order.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "ppgeo/core_geometry.hpp"
#include "ppgeo/grid.hpp"

namespace ppgeo {

struct LossWeights {
  double w_gamma = 1.0;
  double w_depth = 1e-2;
  double lambda = 0.85;
  double alpha = 10.0;

  void validate() const {
    require(w_gamma >= 0.0 && w_depth >= 0.0 && alpha >= 0.0 && lambda >= 0.0,
            ErrorCode::kInvalidArgument, "loss weights must be non-negative");
    require(lambda <= 1.0, ErrorCode::kInvalidArgument, "lambda must not exceed 1");
  }
};

struct MetricReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t pixel_count = 0;
};

/// key=value per line.
inline std::ostream& operator<<(std::ostream& os, const MetricReport& r) {
  const auto prec = os.precision(17);
  os << "abs_rel=" << r.abs_rel << "\nsq_rel=" << r.sq_rel << "\nrmse=" << r.rmse
     << "\nrmse_log=" << r.rmse_log << "\ndelta1=" << r.delta1 << "\ndelta2=" << r.delta2
     << "\ndelta3=" << r.delta3 << "\npixel_count=" << r.pixel_count << "\n";
  os.precision(prec);
  return os;
}

namespace detail {

template <typename A, typename B>
Mask joint_mask(const A& a, const B& b) {
  require(a.same_shape(b), ErrorCode::kShapeMismatch, "grids have different shapes");
  return a.mask() & b.mask();
}

}  // namespace detail

/// Mean |pred - gt| over jointly valid pixels.
inline double gamma_l1_loss(const ScalarGrid& pred, const ScalarGrid& gt) {
  const Mask m = detail::joint_mask(pred, gt);
  CompensatedSum s;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    s.add(std::abs(pred[i] - gt[i]));
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyMask, "no jointly valid pixels");
  return s.value() / static_cast<double>(n);
}

/// alpha * sqrt(mean(d^2) - lambda * mean(d)^2), d = ln pred - ln gt, with the
/// radicand clamped at zero.
inline double silog_loss(const ScalarGrid& pred_depth, const ScalarGrid& gt_depth,
                         const LossWeights& weights = {}) {
  weights.validate();
  const Mask m = detail::joint_mask(pred_depth, gt_depth);
  CompensatedSum sum;
  CompensatedSum sum_sq;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    if (!(pred_depth[i] > 0.0) || !(gt_depth[i] > 0.0))
      throw Error(ErrorCode::kNonPositiveDepth, "silog needs positive depths");
    const double d = std::log(pred_depth[i]) - std::log(gt_depth[i]);
    sum.add(d);
    sum_sq.add(d * d);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyMask, "no jointly valid pixels");
  const double nn = static_cast<double>(n);
  const double mean = sum.value() / nn;
  const double radicand = sum_sq.value() / nn - weights.lambda * mean * mean;
  return weights.alpha * std::sqrt(std::max(0.0, radicand));
}

/// Depth z = h_c / (gamma + ppe) on pixels where gamma and ppe are valid and
/// the denominator is positive; other pixels stay invalid.
inline ScalarGrid depth_from_gamma_map(const ScalarGrid& gamma, const ScalarGrid& ppe,
                                       double camera_height) {
  const Mask m = detail::joint_mask(gamma, ppe);
  ScalarGrid out(gamma.width(), gamma.height(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i] || !(gamma[i] + ppe[i] > tol::kHorizon)) continue;
    out.set(i, gamma_to_depth(gamma[i], ppe[i], camera_height));
  }
  return out;
}

struct LossBreakdown {
  double gamma = 0.0;
  double depth = 0.0;
  double total = 0.0;
};

/// w_gamma * L_gamma + w_depth * L_depth, with both depths obtained from gamma
/// through the embedding. Pixels at or above the horizon only drop out of the
/// depth term.
inline LossBreakdown loss_breakdown(const ScalarGrid& pred_gamma, const ScalarGrid& gt_gamma,
                                    const ScalarGrid& ppe, double camera_height,
                                    const LossWeights& weights = {}) {
  weights.validate();
  require(camera_height > 0.0, ErrorCode::kInvalidArgument, "camera height must be positive");
  LossBreakdown out;
  out.gamma = gamma_l1_loss(pred_gamma, gt_gamma);
  if (weights.w_depth != 0.0) {
    out.depth = silog_loss(depth_from_gamma_map(pred_gamma, ppe, camera_height),
                           depth_from_gamma_map(gt_gamma, ppe, camera_height), weights);
  }
  out.total = weights.w_gamma * out.gamma + weights.w_depth * out.depth;
  return out;
}

inline double total_loss(const ScalarGrid& pred_gamma, const ScalarGrid& gt_gamma,
                         const ScalarGrid& ppe, double camera_height,
                         const LossWeights& weights = {}) {
  return loss_breakdown(pred_gamma, gt_gamma, ppe, camera_height, weights).total;
}

/// Standard depth metrics over `mask` (also restricted to valid pixels of both
/// grids). delta_k counts max(d / d*, d* / d) < 1.25^k strictly.
inline MetricReport depth_metrics(const ScalarGrid& pred, const ScalarGrid& gt, const Mask& mask) {
  const Mask m = detail::joint_mask(pred, gt) & mask;
  CompensatedSum abs_rel, sq_rel, sq, sq_log;
  std::size_t d1 = 0, d2 = 0, d3 = 0, n = 0;
  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const double d = pred[i];
    const double g = gt[i];
    if (!(d > 0.0) || !(g > 0.0))
      throw Error(ErrorCode::kNonPositiveDepth, "metrics need positive depths");
    const double diff = d - g;
    abs_rel.add(std::abs(diff) / g);
    sq_rel.add(diff * diff / g);
    sq.add(diff * diff);
    const double dl = std::log(d / g);
    sq_log.add(dl * dl);
    const double ratio = std::max(d / g, g / d);
    d1 += ratio < t1;
    d2 += ratio < t2;
    d3 += ratio < t3;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyMask, "no pixels to evaluate");
  const double nn = static_cast<double>(n);
  return {abs_rel.value() / nn,
          sq_rel.value() / nn,
          std::sqrt(sq.value() / nn),
          std::sqrt(sq_log.value() / nn),
          d1 / nn,
          d2 / nn,
          d3 / nn,
          n};
}

/// Valid pixels whose height is strictly below `threshold`.
inline Mask height_mask(const ScalarGrid& height, double threshold) {
  Mask m(height.width(), height.height());
  for (std::size_t i = 0; i < height.size(); ++i)
    m.set(i, height.valid(i) && (threshold == std::numeric_limits<double>::infinity() ||
                                 height[i] < threshold));
  return m;
}

/// Evaluation range and optional Garg crop applied to the ground truth.
struct EvalRange {
  double min_depth = 1e-3;
  double max_depth = 80.0;
  bool garg_crop = false;
};

/// Pixels of `gt` inside the evaluation range (and crop); predictions are
/// expected to be clamped with clamp_depth before scoring.
inline Mask evaluation_mask(const ScalarGrid& gt, const EvalRange& range) {
  Mask m(gt.width(), gt.height());
  const int w = gt.width();
  const int h = gt.height();
  const int y0 = static_cast<int>(0.40810811 * h), y1 = static_cast<int>(0.99189189 * h);
  const int x0 = static_cast<int>(0.03594771 * w), x1 = static_cast<int>(0.96405229 * w);
  for_each_pixel(w, h, [&](int x, int y) {
    if (!gt.valid(x, y)) return;
    const double z = gt(x, y);
    if (!(z > range.min_depth && z < range.max_depth)) return;
    if (range.garg_crop && (y < y0 || y >= y1 || x < x0 || x >= x1)) return;
    m.set(x, y, true);
  });
  return m;
}

inline ScalarGrid clamp_depth(ScalarGrid depth, const EvalRange& range) {
  for (std::size_t i = 0; i < depth.size(); ++i)
    if (depth.valid(i)) depth[i] = std::clamp(depth[i], range.min_depth, range.max_depth);
  return depth;
}

}  // namespace ppgeo
