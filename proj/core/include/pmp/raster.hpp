#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pmp/error.hpp"

namespace pmp {

// Label encoding shared by every mask: 0 = ignore, 1..C = objects, C+1 = background.
inline constexpr std::uint8_t kIgnoreLabel = 0;

// Dense row-major 2D grid. Coordinates are (x = column, y = row), top-left origin.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width), data_(checked_size(height, width), fill) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int y, int x) { return data_[index(y, x)]; }
  const T& operator()(int y, int x) const { return data_[index(y, x)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(int height, int width) const noexcept {
    return height_ == height && width_ == width;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return same_shape(other.height(), other.width());
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_size(int height, int width) {
    if (height < 0 || width < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative grid dimension");
    }
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t index(int y, int x) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

using Plane = Grid<double>;
using LabelMask = Grid<std::uint8_t>;

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

// H x W x 3 color raster. Keeps the 8-bit samples and the [0,1] view side by side;
// the normalized view is always the integer view divided by 255.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int height, int width, std::vector<std::uint8_t> interleaved_rgb);
  RasterImage(int height, int width, Rgb fill);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }

  std::uint8_t byte(int y, int x, int c) const { return bytes_[offset(y, x) + c]; }
  double value(int y, int x, int c) const { return normalized_[offset(y, x) + c]; }
  Rgb rgb(int y, int x) const {
    const std::size_t o = offset(y, x);
    return {normalized_[o], normalized_[o + 1], normalized_[o + 2]};
  }

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  std::span<const double> normalized() const noexcept { return normalized_; }

  void set(int y, int x, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  friend bool operator==(const RasterImage& a, const RasterImage& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.bytes_ == b.bytes_;
  }

 private:
  std::size_t offset(int y, int x) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bytes_;
  std::vector<double> normalized_;
};

struct Point {
  int class_id = 0;
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Annotated points. Classes 1..C are objects, C+1 is background.
class PointSet {
 public:
  PointSet() = default;
  PointSet(int num_classes, std::vector<Point> entries);

  int num_classes() const noexcept { return num_classes_; }
  int background_class() const noexcept { return num_classes_ + 1; }
  const std::vector<Point>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  // Points of one class, in input order.
  std::vector<Point> of_class(int class_id) const;
  bool has_class(int class_id) const;

  // Throws OutOfRange if any point falls outside a height x width raster.
  void check_bounds(int height, int width) const;

 private:
  int num_classes_ = 0;
  std::vector<Point> entries_;
};

// (P planes) x H x W stack of reals, plane-major then row-major.
// Plane index p holds class p + 1; the last plane is background.
class PlaneStack {
 public:
  PlaneStack() = default;
  PlaneStack(int num_planes, int height, int width, double fill = 0.0);

  int num_planes() const noexcept { return planes_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  std::span<double> plane(int p) {
    return {data_.data() + static_cast<std::size_t>(p) * plane_size(), plane_size()};
  }
  std::span<const double> plane(int p) const {
    return {data_.data() + static_cast<std::size_t>(p) * plane_size(), plane_size()};
  }
  double& at(int p, int y, int x) { return data_[index(p, y, x)]; }
  double at(int p, int y, int x) const { return data_[index(p, y, x)]; }

  Plane plane_grid(int p) const;
  void set_plane(int p, const Plane& values);

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const PlaneStack& other) const noexcept {
    return planes_ == other.planes_ && height_ == other.height_ && width_ == other.width_;
  }
  bool all_within_unit_range() const noexcept;

  friend bool operator==(const PlaneStack&, const PlaneStack&) = default;

 private:
  std::size_t index(int p, int y, int x) const noexcept {
    return static_cast<std::size_t>(p) * plane_size() +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int planes_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Per-class softmax scores x C+1 planes.
using ScoreStack = PlaneStack;

// Number of object classes implied by a stack holding C+1 planes.
inline int object_classes(const PlaneStack& stack) { return stack.num_planes() - 1; }

// Throws OutOfRange when any label exceeds num_classes + 1.
void check_labels(const LabelMask& mask, int num_classes);

}  // namespace pmp
