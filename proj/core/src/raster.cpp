#include "pmp/raster.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <tuple>

namespace pmp {

RasterImage::RasterImage(int height, int width, std::vector<std::uint8_t> interleaved_rgb)
    : height_(height), width_(width), bytes_(std::move(interleaved_rgb)) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
  const std::size_t expected =
      static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3;
  if (bytes_.size() != expected) {
    throw Error(ErrorCode::kCorruptData, "pixel buffer holds " + std::to_string(bytes_.size()) +
                                             " bytes, expected " + std::to_string(expected));
  }
  normalized_.resize(bytes_.size());
  std::transform(bytes_.begin(), bytes_.end(), normalized_.begin(),
                 [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
}

RasterImage::RasterImage(int height, int width, Rgb fill)
    : RasterImage(height, width,
                  std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(height, 0)) *
                                            static_cast<std::size_t>(std::max(width, 0)) * 3)) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      auto to_byte = [](double v) {
        return static_cast<std::uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
      };
      set(y, x, to_byte(fill.r), to_byte(fill.g), to_byte(fill.b));
    }
  }
}

void RasterImage::set(int y, int x, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t o = offset(y, x);
  bytes_[o] = r;
  bytes_[o + 1] = g;
  bytes_[o + 2] = b;
  normalized_[o] = r / 255.0;
  normalized_[o + 1] = g / 255.0;
  normalized_[o + 2] = b / 255.0;
}

PointSet::PointSet(int num_classes, std::vector<Point> entries)
    : num_classes_(num_classes), entries_(std::move(entries)) {
  if (num_classes < 1 || num_classes > 254) {
    throw Error(ErrorCode::kOutOfRange,
                "number of classes must lie in [1, 254], got " + std::to_string(num_classes));
  }
  std::set<std::tuple<int, int, int>> seen;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Point& p = entries_[i];
    if (p.class_id < 1 || p.class_id > num_classes + 1) {
      throw Error(ErrorCode::kOutOfRange, "point " + std::to_string(i) + " has class " +
                                              std::to_string(p.class_id) + " outside [1, " +
                                              std::to_string(num_classes + 1) + "]");
    }
    if (p.x < 0 || p.y < 0) {
      throw Error(ErrorCode::kOutOfRange,
                  "point " + std::to_string(i) + " has negative coordinates");
    }
    if (!seen.emplace(p.class_id, p.x, p.y).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate point (" + std::to_string(p.class_id) +
                                                   "," + std::to_string(p.x) + "," +
                                                   std::to_string(p.y) + ")");
    }
  }
}

std::vector<Point> PointSet::of_class(int class_id) const {
  std::vector<Point> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [class_id](const Point& p) { return p.class_id == class_id; });
  return out;
}

bool PointSet::has_class(int class_id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [class_id](const Point& p) { return p.class_id == class_id; });
}

void PointSet::check_bounds(int height, int width) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Point& p = entries_[i];
    if (p.x >= width || p.y >= height) {
      throw Error(ErrorCode::kOutOfRange,
                  "point " + std::to_string(i) + " at (" + std::to_string(p.x) + "," +
                      std::to_string(p.y) + ") lies outside a " + std::to_string(width) + "x" +
                      std::to_string(height) + " image");
    }
  }
}

PlaneStack::PlaneStack(int num_planes, int height, int width, double fill)
    : planes_(num_planes), height_(height), width_(width) {
  if (num_planes < 0 || height < 0 || width < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative stack dimension");
  }
  data_.assign(static_cast<std::size_t>(num_planes) * plane_size(), fill);
}

Plane PlaneStack::plane_grid(int p) const {
  Plane out(height_, width_);
  auto src = plane(p);
  std::copy(src.begin(), src.end(), out.values().begin());
  return out;
}

void PlaneStack::set_plane(int p, const Plane& values) {
  if (!values.same_shape(height_, width_)) {
    throw Error(ErrorCode::kDimensionMismatch, "plane shape does not match stack");
  }
  std::copy(values.values().begin(), values.values().end(), plane(p).begin());
}

bool PlaneStack::all_within_unit_range() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

void check_labels(const LabelMask& mask, int num_classes) {
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] > num_classes + 1) {
      throw Error(ErrorCode::kOutOfRange, "label " + std::to_string(mask[i]) +
                                              " exceeds background label " +
                                              std::to_string(num_classes + 1));
    }
  }
}

}  // namespace pmp
