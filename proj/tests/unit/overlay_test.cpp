#include <gtest/gtest.h>

#include "pmp/overlay.hpp"
#include "pmp/rng.hpp"
#include "support/oracles.hpp"

namespace pmp {
namespace {

Color8 pixel(const ImageBuffer& buf, int y, int x) {
  const std::size_t i = (static_cast<std::size_t>(y) * buf.width + x) * buf.channels;
  return {buf.samples[i], buf.samples[i + 1], buf.samples[i + 2]};
}

TEST(Overlay, ZeroAlphaAndIgnoreKeepImage) {
  Rng rng(2);
  const RasterImage image = oracle::random_image(6, 7, rng);
  LabelMask mask(6, 7, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = static_cast<std::uint8_t>(i % 4);
  const LabelMask ignore(6, 7, 0);
  for (const auto& [m, alpha] : {std::pair<const LabelMask*, double>{&mask, 0.0}, std::pair<const LabelMask*, double>{&ignore, 0.7}}) {
    const ImageBuffer out = render_overlay(image, *m, 2, alpha);
    ASSERT_EQ(out.channels, 4);
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 7; ++x) {
        const Color8 c = pixel(out, y, x);
        EXPECT_EQ(c, (Color8{image.byte(y, x, 0), image.byte(y, x, 1), image.byte(y, x, 2)}));
        EXPECT_EQ(out.samples[(static_cast<std::size_t>(y) * 7 + x) * 4 + 3], 255);
      }
    }
  }
}

TEST(Overlay, FullAlphaGivesPaletteColors) {
  const RasterImage image(1, 4, Rgb{0.5, 0.5, 0.5});
  LabelMask mask(1, 4, 0);
  mask[0] = 1;
  mask[1] = 3;
  mask[2] = 4;
  const ImageBuffer out = render_overlay(image, mask, 3, 1.0);
  EXPECT_EQ(pixel(out, 0, 0), kClassPalette[0]);
  EXPECT_EQ(pixel(out, 0, 1), kClassPalette[2]);
  EXPECT_EQ(pixel(out, 0, 2), kBackgroundTint);
  EXPECT_EQ(pixel(out, 0, 3), (Color8{128, 128, 128}));
}

TEST(Overlay, PaletteWrapsAndHalfBlend) {
  EXPECT_EQ(label_color(22, 30), kClassPalette[0]);
  EXPECT_EQ(label_color(31, 30), kBackgroundTint);
  const RasterImage image(1, 1, Rgb{});
  LabelMask mask(1, 1, 1);
  EXPECT_EQ(pixel(render_overlay(image, mask, 1, 0.5), 0, 0), (Color8{64, 0, 0}));
}

TEST(Overlay, Errors) {
  const RasterImage image(2, 2, Rgb{});
  EXPECT_THROW(render_overlay(image, LabelMask(2, 3, 0), 1, 0.5), Error);
  EXPECT_THROW(render_overlay(image, LabelMask(2, 2, 0), 1, 1.5), Error);
  EXPECT_THROW(render_overlay(image, LabelMask(2, 2, 5), 1, 0.5), Error);
}

TEST(Overlay, Deterministic) {
  Rng rng(8);
  const RasterImage image = oracle::random_image(9, 9, rng);
  LabelMask mask(9, 9, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  EXPECT_EQ(render_overlay(image, mask, 2, 0.4), render_overlay(image, mask, 2, 0.4));
}

TEST(Heatmap, EndpointsAndMonotoneChannels) {
  EXPECT_EQ(heat_color(0.0), (Color8{0, 0, 0}));
  EXPECT_EQ(heat_color(1.0), (Color8{255, 255, 255}));
  Color8 prev = heat_color(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const Color8 c = heat_color(i / 1000.0);
    EXPECT_GE(c.r, prev.r);
    EXPECT_GE(c.g, prev.g);
    EXPECT_GE(c.b, prev.b);
    prev = c;
  }
}

TEST(Heatmap, RendersPlane) {
  Plane plane(2, 3, 0.0);
  plane(1, 2) = 1.0;
  const ImageBuffer out = render_heatmap(plane);
  EXPECT_EQ(out.channels, 3);
  EXPECT_EQ(out.samples.size(), 18u);
  EXPECT_EQ(pixel(out, 1, 2), (Color8{255, 255, 255}));
  EXPECT_EQ(pixel(out, 0, 0), (Color8{0, 0, 0}));
}

TEST(Heatmap, Errors) {
  const std::vector<double> values{0.0, 1.2};
  try {
    render_heatmap(values, 1, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
  try {
    render_heatmap(values, 2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

}  // namespace
}  // namespace pmp
