#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pmp/raster.hpp"

namespace pmp {

struct Color8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Color8&, const Color8&) = default;
};

// Fixed class palette; class c uses entry (c - 1) % 21.
extern const std::array<Color8, 21> kClassPalette;
inline constexpr Color8 kBackgroundTint{64, 64, 64};

// Interleaved 8-bit raster with 3 (RGB) or 4 (RGBA) channels.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> samples;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

Color8 label_color(int label, int num_classes);

// Ignore pixels keep the image color; labeled pixels blend toward their class color
// (background toward dark gray) with weight alpha. Output is opaque RGBA.
ImageBuffer render_overlay(const RasterImage& image, const LabelMask& mask, int num_classes,
                           double alpha);

// Black -> red -> yellow -> white ramp; every channel is non-decreasing in the value.
Color8 heat_color(double value);
ImageBuffer render_heatmap(const Plane& plane);
ImageBuffer render_heatmap(std::span<const double> values, int height, int width);

}  // namespace pmp
