#pragma once

// Middlebury .flo: float32 magic 202021.25, int32 width, int32 height, then
// row-major interleaved float32 (u, v). Components above 1e9 in magnitude
// mark unknown flow; invalid pixels are written as (1e10, 1e10).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ppgeo/grid.hpp"
#include "ppgeo/io/files.hpp"

namespace ppgeo::io {

inline constexpr float kFloMagic = 202021.25f;
inline constexpr float kFloUnknown = 1e10f;

inline std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + flow.size() * 8);
  put_le<float>(out, kFloMagic);
  put_le<std::int32_t>(out, flow.width());
  put_le<std::int32_t>(out, flow.height());
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (flow.valid(i)) {
      put_le<float>(out, static_cast<float>(flow[i].x()));
      put_le<float>(out, static_cast<float>(flow[i].y()));
    } else {
      put_le<float>(out, kFloUnknown);
      put_le<float>(out, kFloUnknown);
    }
  }
  return out;
}

inline FlowField decode_flo(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw Error(ErrorCode::kSizeMismatch, ".flo header is truncated");
  if (get_le<float>(bytes.data()) != kFloMagic)
    throw Error(ErrorCode::kFormat, ".flo magic mismatch");
  const auto w = get_le<std::int32_t>(bytes.data() + 4);
  const auto h = get_le<std::int32_t>(bytes.data() + 8);
  if (w < 0 || h < 0 || w > (1 << 20) || h > (1 << 20))
    throw Error(ErrorCode::kFormat, ".flo has an implausible size");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() != 12 + n * 8)
    throw Error(ErrorCode::kSizeMismatch, ".flo payload does not match its header");
  FlowField flow(w, h, Vec2::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    const float u = get_le<float>(bytes.data() + 12 + 8 * i);
    const float v = get_le<float>(bytes.data() + 16 + 8 * i);
    if (!std::isfinite(u) || !std::isfinite(v) || std::abs(u) > 1e9f || std::abs(v) > 1e9f)
      continue;
    flow.set(i, Vec2(u, v));
  }
  return flow;
}

inline FlowField read_flo(const std::filesystem::path& path) { return decode_flo(read_bytes(path)); }

inline void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  write_atomic(path, encode_flo(flow));
}

}  // namespace ppgeo::io
