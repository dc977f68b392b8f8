#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ppgeo/error.hpp"

namespace ppgeo {

/// Per-pixel validity bits for a width x height raster, row-major.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool value = false)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(checked_area(width, height)), value ? 1 : 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool operator()(int x, int y) const { return bits_[index(x, y)] != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(int x, int y, bool value) { bits_[index(x, y)] = value ? 1 : 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  bool same_shape(const Mask& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  Mask operator&(const Mask& other) const {
    require(same_shape(other), ErrorCode::kShapeMismatch, "mask shapes differ");
    Mask out(width_, height_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
    return out;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  static long checked_area(int width, int height) {
    require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument, "negative raster size");
    return static_cast<long>(width) * height;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Dense raster of T with a validity mask. Values at invalid pixels carry no meaning.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, const T& fill = T{}, bool valid = false)
      : mask_(width, height, valid),
        values_(mask_.size(), fill) {}

  int width() const { return mask_.width(); }
  int height() const { return mask_.height(); }
  std::size_t size() const { return values_.size(); }

  const T& operator()(int x, int y) const { return values_[index(x, y)]; }
  T& operator()(int x, int y) { return values_[index(x, y)]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& operator[](std::size_t i) { return values_[i]; }

  bool valid(int x, int y) const { return mask_(x, y); }
  bool valid(std::size_t i) const { return mask_[i]; }
  void set_valid(int x, int y, bool v) { mask_.set(x, y, v); }
  void set_valid(std::size_t i, bool v) { mask_.set(i, v); }

  /// Writes a value and marks the pixel valid.
  void set(int x, int y, const T& value) {
    values_[index(x, y)] = value;
    mask_.set(x, y, true);
  }
  void set(std::size_t i, const T& value) {
    values_[i] = value;
    mask_.set(i, true);
  }

  const Mask& mask() const { return mask_; }
  Mask& mask() { return mask_; }
  const std::vector<T>& values() const { return values_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width() == other.width() && height() == other.height();
  }
  bool same_shape(const Mask& m) const { return width() == m.width() && height() == m.height(); }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width()) + static_cast<std::size_t>(x);
  }

  Mask mask_;
  std::vector<T> values_;
};

using ScalarGrid = Grid<double>;
/// Residual flow u_res = p_w - p_t per target pixel, in pixels.
using FlowField = Grid<Eigen::Vector2d>;

template <typename F>
void for_each_pixel(int width, int height, F&& fn) {
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) fn(x, y);
}

/// Neumaier-compensated running sum. Order-deterministic.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      carry_ += (sum_ - t) + v;
    else
      carry_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace ppgeo
