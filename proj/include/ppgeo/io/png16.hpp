#pragma once

// KITTI-style depth maps: 16-bit grayscale PNG, depth = raw / 256 m, raw 0
// marks a missing measurement.

#include <png.h>

#include <csetjmp>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ppgeo/grid.hpp"
#include "ppgeo/io/files.hpp"

namespace ppgeo::io {

namespace detail {

struct PngBuffer {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

inline void png_read_from_buffer(png_structp png, png_bytep out, png_size_t n) {
  auto* buf = static_cast<PngBuffer*>(png_get_io_ptr(png));
  if (buf->offset + n > buf->size) png_error(png, "truncated png");
  std::memcpy(out, buf->data + buf->offset, n);
  buf->offset += n;
}

inline void png_write_to_vector(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

inline void png_flush_noop(png_structp) {}

inline void png_silent_warning(png_structp, png_const_charp) {}

[[noreturn]] inline void png_silent_error(png_structp png, png_const_charp) {
  png_longjmp(png, 1);
}

enum class PngStatus { kOk, kMalformed, kWrongFormat };

// Only trivially destructible locals live across setjmp in these two helpers.
inline PngStatus decode_gray16(const std::vector<std::uint8_t>& bytes, std::uint32_t& width,
                               std::uint32_t& height, std::vector<std::uint16_t>& raw) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) return PngStatus::kMalformed;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_silent_error,
                                           png_silent_warning);
  if (png == nullptr) return PngStatus::kMalformed;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return PngStatus::kMalformed;
  }
  PngBuffer buf{bytes.data(), bytes.size(), 0};
  std::uint8_t* volatile pixels = nullptr;
  png_bytep* volatile rows = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    delete[] rows;
    delete[] pixels;
    png_destroy_read_struct(&png, &info, nullptr);
    return PngStatus::kMalformed;
  }
  png_set_read_fn(png, &buf, png_read_from_buffer);
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (bit_depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    return PngStatus::kWrongFormat;
  }
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * 2;
  pixels = new std::uint8_t[stride * height];
  rows = new png_bytep[height];
  for (std::uint32_t y = 0; y < height; ++y) rows[y] = pixels + y * stride;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  raw.resize(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<std::uint16_t>((pixels[2 * i] << 8) | pixels[2 * i + 1]);
  delete[] rows;
  delete[] pixels;
  return PngStatus::kOk;
}

inline bool encode_gray16(std::uint32_t width, std::uint32_t height,
                          const std::vector<std::uint16_t>& raw, std::vector<std::uint8_t>& out) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_silent_error,
                                            png_silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  std::vector<std::uint8_t> pixels(raw.size() * 2);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    pixels[2 * i] = static_cast<std::uint8_t>(raw[i] >> 8);
    pixels[2 * i + 1] = static_cast<std::uint8_t>(raw[i] & 0xff);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < height; ++y)
    png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width * 2);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

inline ScalarGrid decode_depth_png16(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t w = 0, h = 0;
  std::vector<std::uint16_t> raw;
  switch (detail::decode_gray16(bytes, w, h, raw)) {
    case detail::PngStatus::kMalformed:
      throw Error(ErrorCode::kMalformedFile, "not a readable png");
    case detail::PngStatus::kWrongFormat:
      throw Error(ErrorCode::kWrongBitDepth, "depth png must be 16-bit single channel");
    case detail::PngStatus::kOk:
      break;
  }
  ScalarGrid depth(static_cast<int>(w), static_cast<int>(h), 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (raw[i] != 0) depth.set(i, raw[i] / 256.0);
  return depth;
}

/// Depths are rounded to the nearest 1/256 m; invalid or non-positive
/// pixels are written as 0. Depths above 65535/256 m are rejected.
inline std::vector<std::uint8_t> encode_depth_png16(const ScalarGrid& depth) {
  std::vector<std::uint16_t> raw(depth.size(), 0);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid(i)) continue;
    const double q = std::round(depth[i] * 256.0);
    require(std::isfinite(q) && q <= 65535.0, ErrorCode::kInvalidArgument,
            "depth exceeds the 16-bit png range");
    raw[i] = q > 0.0 ? static_cast<std::uint16_t>(q) : 0;
  }
  std::vector<std::uint8_t> out;
  if (!detail::encode_gray16(static_cast<std::uint32_t>(depth.width()),
                             static_cast<std::uint32_t>(depth.height()), raw, out))
    throw Error(ErrorCode::kIo, "png encoding failed");
  return out;
}

inline ScalarGrid read_depth_png16(const std::filesystem::path& path) {
  return decode_depth_png16(read_bytes(path));
}

inline void write_depth_png16(const std::filesystem::path& path, const ScalarGrid& depth) {
  write_atomic(path, encode_depth_png16(depth));
}

}  // namespace ppgeo::io
