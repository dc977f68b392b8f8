#pragma once

// Scalar raster for signed quantities (gamma, embedding, heights, depths):
//
//   8 bytes   magic "PPGRAST1"
//   uint32    width  (little endian)
//   uint32    height (little endian)
//   float32   width * height values, row-major (0 where invalid)
//   uint8     ceil(width * height / 8) mask bytes, bit i % 8 of byte i / 8

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <vector>

#include "ppgeo/grid.hpp"
#include "ppgeo/io/files.hpp"

namespace ppgeo::io {

inline constexpr std::array<char, 8> kRasterMagic = {'P', 'P', 'G', 'R', 'A', 'S', 'T', '1'};

inline std::vector<std::uint8_t> encode_raster(const ScalarGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<std::uint8_t> out(kRasterMagic.begin(), kRasterMagic.end());
  out.reserve(16 + 4 * n + (n + 7) / 8);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.width()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.height()));
  for (std::size_t i = 0; i < n; ++i)
    put_le<float>(out, grid.valid(i) ? static_cast<float>(grid[i]) : 0.0f);
  std::vector<std::uint8_t> bits((n + 7) / 8, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (grid.valid(i)) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

inline ScalarGrid decode_raster(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16) throw Error(ErrorCode::kSizeMismatch, "raster header is truncated");
  if (std::memcmp(bytes.data(), kRasterMagic.data(), kRasterMagic.size()) != 0)
    throw Error(ErrorCode::kFormat, "raster magic mismatch");
  const auto w = get_le<std::uint32_t>(bytes.data() + 8);
  const auto h = get_le<std::uint32_t>(bytes.data() + 12);
  if (w > (1u << 20) || h > (1u << 20)) throw Error(ErrorCode::kFormat, "implausible raster size");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 16 + 4 * n + (n + 7) / 8)
    throw Error(ErrorCode::kSizeMismatch, "raster payload does not match its header");
  ScalarGrid grid(static_cast<int>(w), static_cast<int>(h), 0.0);
  const std::uint8_t* bits = bytes.data() + 16 + 4 * n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(bits[i / 8] & (1u << (i % 8)))) continue;
    const float v = get_le<float>(bytes.data() + 16 + 4 * i);
    if (!std::isfinite(v)) throw Error(ErrorCode::kMalformedFile, "non-finite valid raster value");
    grid.set(i, v);
  }
  return grid;
}

inline ScalarGrid read_raster(const std::filesystem::path& path) {
  return decode_raster(read_bytes(path));
}

inline void write_raster(const std::filesystem::path& path, const ScalarGrid& grid) {
  write_atomic(path, encode_raster(grid));
}

}  // namespace ppgeo::io
