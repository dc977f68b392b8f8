#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppgeo {

// Numerical guards shared by every module.
namespace tol {
inline constexpr double kSingular = 1e-12;
inline constexpr double kHorizon = 1e-9;
inline constexpr double kUnitNorm = 1e-12;
inline constexpr double kRigid = 1e-10;
}  // namespace tol

enum class ErrorCode {
  kInvalidArgument,
  kSingularHomography,
  kPointAtInfinity,
  kLateralMotion,
  kHorizon,
  kNonPositiveDepth,
  kPole,
  kEpipoleProximity,
  kDegenerate,
  kDegenerateCloud,
  kInsufficientInliers,
  kCancellation,
  kNoCorrespondence,
  kEmptyMask,
  kShapeMismatch,
  kMalformedFile,
  kWrongBitDepth,
  kFormat,
  kSizeMismatch,
  kParse,
  kNonRigid,
  kIo,
  kConfig,
};

/// Short, stable category name used in CLI diagnostics.
inline std::string_view category_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kSingularHomography: return "singular-homography";
    case ErrorCode::kPointAtInfinity: return "point-at-infinity";
    case ErrorCode::kLateralMotion: return "lateral-motion";
    case ErrorCode::kHorizon: return "horizon";
    case ErrorCode::kNonPositiveDepth: return "nonpositive-depth";
    case ErrorCode::kPole: return "pole";
    case ErrorCode::kEpipoleProximity: return "epipole-proximity";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kDegenerateCloud: return "degenerate-cloud";
    case ErrorCode::kInsufficientInliers: return "insufficient-inliers";
    case ErrorCode::kCancellation: return "cancellation";
    case ErrorCode::kNoCorrespondence: return "no-correspondence";
    case ErrorCode::kEmptyMask: return "empty-mask";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kMalformedFile: return "malformed-file";
    case ErrorCode::kWrongBitDepth: return "wrong-bit-depth";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kSizeMismatch: return "size-mismatch";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kNonRigid: return "non-rigid";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view category() const noexcept { return category_name(code_); }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace ppgeo
