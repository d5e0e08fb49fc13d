#include "pmp/overlay.hpp"

#include <algorithm>
#include <cmath>

namespace pmp {

const std::array<Color8, 21> kClassPalette = {{
    {128, 0, 0},   {0, 128, 0},   {128, 128, 0},  {0, 0, 128},    {128, 0, 128},
    {0, 128, 128}, {128, 128, 128}, {64, 0, 0},   {192, 0, 0},    {64, 128, 0},
    {192, 128, 0}, {64, 0, 128},  {192, 0, 128},  {64, 128, 128}, {192, 128, 128},
    {0, 64, 0},    {128, 64, 0},  {0, 192, 0},    {128, 192, 0},  {0, 64, 128},
    {128, 64, 128},
}};

Color8 label_color(int label, int num_classes) {
  if (label == num_classes + 1) return kBackgroundTint;
  return kClassPalette[static_cast<std::size_t>(label - 1) % kClassPalette.size()];
}

ImageBuffer render_overlay(const RasterImage& image, const LabelMask& mask, int num_classes,
                           double alpha) {
  if (!mask.same_shape(image.height(), image.width())) {
    throw Error(ErrorCode::kDimensionMismatch, "mask and image differ in size");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  check_labels(mask, num_classes);
  ImageBuffer out{image.height(), image.width(), 4, {}};
  out.samples.reserve(mask.size() * 4);
  auto blend = [alpha](std::uint8_t base, std::uint8_t tint) {
    return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * base + alpha * tint));
  };
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      std::uint8_t r = image.byte(y, x, 0), g = image.byte(y, x, 1), b = image.byte(y, x, 2);
      if (const int label = mask(y, x); label != kIgnoreLabel) {
        const Color8 tint = label_color(label, num_classes);
        r = blend(r, tint.r);
        g = blend(g, tint.g);
        b = blend(b, tint.b);
      }
      out.samples.insert(out.samples.end(), {r, g, b, 255});
    }
  }
  return out;
}

Color8 heat_color(double value) {
  const double v = std::clamp(value, 0.0, 1.0) * 3.0;
  auto ramp = [](double t) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
  };
  return {ramp(v), ramp(v - 1.0), ramp(v - 2.0)};
}

ImageBuffer render_heatmap(std::span<const double> values, int height, int width) {
  if (values.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorCode::kDimensionMismatch, "plane size does not match dimensions");
  }
  ImageBuffer out{height, width, 3, {}};
  out.samples.reserve(values.size() * 3);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "heatmap values must lie in [0, 1]");
    }
    const Color8 c = heat_color(v);
    out.samples.insert(out.samples.end(), {c.r, c.g, c.b});
  }
  return out;
}

ImageBuffer render_heatmap(const Plane& plane) {
  return render_heatmap(plane.values(), plane.height(), plane.width());
}

}  // namespace pmp
