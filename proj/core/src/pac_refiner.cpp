#include "pmp/pac_refiner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace pmp {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

std::string_view to_string(KernelVariant variant) {
  return variant == KernelVariant::kExpRatio ? "exp-ratio" : "literal";
}

KernelVariant parse_kernel_variant(std::string_view text) {
  if (text == "exp-ratio") return KernelVariant::kExpRatio;
  if (text == "literal") return KernelVariant::kLiteral;
  throw Error(ErrorCode::kInvalidArgument, "unknown kernel variant '" + std::string(text) + "'");
}

void validate(const PacLayerSpec& spec) {
  if (spec.kernel_size != 3 && spec.kernel_size != 5 && spec.kernel_size != 7) {
    throw Error(ErrorCode::kInvalidArgument, "kernel size must be 3, 5 or 7");
  }
  if (spec.dilation < 1) throw Error(ErrorCode::kInvalidArgument, "dilation must be >= 1");
  if (spec.stride != 1 && spec.stride != 2) {
    throw Error(ErrorCode::kInvalidArgument, "stride must be 1 or 2");
  }
}

std::vector<PacLayerSpec> default_pac_layers() {
  constexpr int kKernels[12] = {7, 7, 5, 5, 3, 3, 3, 3, 3, 3, 3, 3};
  constexpr int kDilations[12] = {1, 1, 2, 2, 4, 4, 8, 8, 16, 16, 32, 32};
  constexpr int kStrides[12] = {2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1};
  std::vector<PacLayerSpec> layers;
  for (int i = 0; i < 12; ++i) layers.push_back({kKernels[i], kDilations[i], kStrides[i]});
  return layers;
}

std::vector<PacLayerSpec> parse_pac_layers(std::string_view text) {
  std::vector<PacLayerSpec> layers;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    PacLayerSpec spec;
    if (!(fields >> spec.kernel_size)) continue;
    std::string extra;
    if (!(fields >> spec.dilation >> spec.stride) || (fields >> extra)) {
      throw Error(ErrorCode::kParseError,
                  "layer line " + std::to_string(line_no) + ": expected 'kernel dilation stride'");
    }
    validate(spec);
    layers.push_back(spec);
  }
  if (layers.empty()) throw Error(ErrorCode::kParseError, "layer file lists no layers");
  return layers;
}

int effective_dilation(const PacLayerSpec& spec, int height, int width, bool cap) {
  if (!cap) return spec.dilation;
  const int limit = std::max(1, (std::min(height, width) - 1) / (spec.kernel_size - 1));
  return std::min(spec.dilation, limit);
}

KernelContext kernel_context(std::span<const Rgb> guidance_window,
                             std::span<const double> feature_window) {
  if (guidance_window.empty() || guidance_window.size() != feature_window.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "kernel windows must be non-empty and equal-sized");
  }
  KernelContext ctx;
  const double n = static_cast<double>(guidance_window.size());
  // Pooled over channels: each channel deviates around its own window mean.
  double mr = 0.0, mg = 0.0, mb = 0.0;
  for (const Rgb& c : guidance_window) {
    mr += c.r;
    mg += c.g;
    mb += c.b;
  }
  mr /= n;
  mg /= n;
  mb /= n;
  double var = 0.0;
  for (const Rgb& c : guidance_window) {
    var += (c.r - mr) * (c.r - mr) + (c.g - mg) * (c.g - mg) + (c.b - mb) * (c.b - mb);
  }
  ctx.sigma = std::sqrt(var / (3.0 * n));
  double feature_sum = 0.0;
  for (double f : feature_window) feature_sum += f;
  ctx.mu = feature_sum / n;
  const Rgb center = guidance_window[guidance_window.size() / 2];
  ctx.delta.reserve(guidance_window.size());
  for (const Rgb& c : guidance_window) {
    const double dr = c.r - center.r, dg = c.g - center.g, db = c.b - center.b;
    ctx.delta.push_back(std::sqrt(dr * dr + dg * dg + db * db));
  }
  return ctx;
}

std::vector<double> compute_kernel(std::span<const Rgb> guidance_window,
                                   std::span<const double> feature_window, KernelVariant variant) {
  const KernelContext ctx = kernel_context(guidance_window, feature_window);
  std::vector<double> weights(ctx.delta.size());
  const double scale = 1.0 / (ctx.sigma + kKernelEpsilon);
  if (variant == KernelVariant::kLiteral) {
    for (std::size_t t = 0; t < weights.size(); ++t) weights[t] = -ctx.delta[t] * scale * ctx.mu;
    return weights;
  }
  double total = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    weights[t] = std::exp(-ctx.delta[t] * scale) * ctx.mu;
    total += weights[t];
  }
  if (total > 0.0) {
    for (double& w : weights) w /= total;
  }
  return weights;
}

PlaneStack guidance_from_image(const RasterImage& image) {
  PlaneStack out(3, image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = image.value(y, x, c);
    }
  }
  return out;
}

PlaneStack average_pool(const PlaneStack& stack, int factor) {
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "pool factor must be >= 1");
  if (factor == 1) return stack;
  const int h = ceil_div(stack.height(), factor);
  const int w = ceil_div(stack.width(), factor);
  PlaneStack out(stack.num_planes(), h, w);
  for (int p = 0; p < stack.num_planes(); ++p) {
    for (int y = 0; y < h; ++y) {
      const int y1 = std::min(stack.height(), (y + 1) * factor);
      for (int x = 0; x < w; ++x) {
        const int x1 = std::min(stack.width(), (x + 1) * factor);
        double sum = 0.0;
        int count = 0;
        for (int sy = y * factor; sy < y1; ++sy) {
          for (int sx = x * factor; sx < x1; ++sx) {
            sum += stack.at(p, sy, sx);
            ++count;
          }
        }
        out.at(p, y, x) = sum / count;
      }
    }
  }
  return out;
}

PlaneStack upsample_bilinear(const PlaneStack& stack, int height, int width, int scale) {
  if (scale < 1) throw Error(ErrorCode::kInvalidArgument, "scale must be >= 1");
  PlaneStack out(stack.num_planes(), height, width);
  const int h = stack.height(), w = stack.width();
  for (int y = 0; y < height; ++y) {
    const double sy = std::min(static_cast<double>(y) / scale, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = std::min(static_cast<double>(x) / scale, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - x0;
      for (int p = 0; p < stack.num_planes(); ++p) {
        const double top = (1.0 - fx) * stack.at(p, y0, x0) + fx * stack.at(p, y0, x1);
        const double bottom = (1.0 - fx) * stack.at(p, y1, x0) + fx * stack.at(p, y1, x1);
        out.at(p, y, x) = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

PlaneStack pac_layer(const PlaneStack& features, const PlaneStack& guidance,
                     const PacLayerSpec& spec, const PacOptions& options) {
  validate(spec);
  if (guidance.num_planes() != 3 || guidance.height() != features.height() ||
      guidance.width() != features.width()) {
    throw Error(ErrorCode::kDimensionMismatch, "guidance does not match feature resolution");
  }
  const int h = features.height(), w = features.width();
  if (h < 1 || w < 1) throw Error(ErrorCode::kImageTooSmall, "empty feature map");

  const int k = spec.kernel_size;
  const int radius = k / 2;
  const int taps = k * k;
  const int dilation = effective_dilation(spec, h, w, options.cap_dilation);
  const int out_h = ceil_div(h, spec.stride);
  const int out_w = ceil_div(w, spec.stride);
  PlaneStack out(features.num_planes(), out_h, out_w);

  std::vector<std::size_t> offsets(taps);
  std::vector<double> spatial(taps);
  const auto red = guidance.plane(0), green = guidance.plane(1), blue = guidance.plane(2);
  const int center_tap = taps / 2;

  for (int oy = 0; oy < out_h; ++oy) {
    const int cy = oy * spec.stride;
    for (int ox = 0; ox < out_w; ++ox) {
      const int cx = ox * spec.stride;
      int t = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int sy = std::clamp(cy + dy * dilation, 0, h - 1);
        for (int dx = -radius; dx <= radius; ++dx, ++t) {
          const int sx = std::clamp(cx + dx * dilation, 0, w - 1);
          offsets[t] = static_cast<std::size_t>(sy) * w + sx;
        }
      }

      double mr = 0.0, mg = 0.0, mb = 0.0;
      for (int i = 0; i < taps; ++i) {
        mr += red[offsets[i]];
        mg += green[offsets[i]];
        mb += blue[offsets[i]];
      }
      mr /= taps;
      mg /= taps;
      mb /= taps;
      double var = 0.0;
      for (int i = 0; i < taps; ++i) {
        const double r = red[offsets[i]] - mr, g = green[offsets[i]] - mg,
                     b = blue[offsets[i]] - mb;
        var += r * r + g * g + b * b;
      }
      const double scale = 1.0 / (std::sqrt(var / (3.0 * taps)) + kKernelEpsilon);
      const std::size_t c = offsets[center_tap];
      for (int i = 0; i < taps; ++i) {
        const double dr = red[offsets[i]] - red[c], dg = green[offsets[i]] - green[c],
                     db = blue[offsets[i]] - blue[c];
        const double ratio = std::sqrt(dr * dr + dg * dg + db * db) * scale;
        spatial[i] = options.variant == KernelVariant::kExpRatio ? std::exp(-ratio) : -ratio;
      }

      for (int p = 0; p < features.num_planes(); ++p) {
        const auto plane = features.plane(p);
        double mu = 0.0;
        for (int i = 0; i < taps; ++i) mu += plane[offsets[i]];
        mu /= taps;
        double acc = 0.0, total = 0.0;
        for (int i = 0; i < taps; ++i) {
          const double weight = spatial[i] * mu;
          acc += weight * plane[offsets[i]];
          total += weight;
        }
        if (options.variant == KernelVariant::kExpRatio) {
          acc = total > 0.0 ? acc / total : 0.0;
        }
        out.at(p, oy, ox) = acc;
      }
    }
  }
  return out;
}

ScoreStack refine(const ScoreStack& scores, const RasterImage& image, const RefineConfig& config) {
  if (scores.height() < 1 || scores.width() < 1) {
    throw Error(ErrorCode::kImageTooSmall, "score stack has no pixels");
  }
  if (scores.height() != image.height() || scores.width() != image.width()) {
    throw Error(ErrorCode::kDimensionMismatch, "score stack and image differ in size");
  }
  PlaneStack features = scores;
  PlaneStack guidance = guidance_from_image(image);
  int net_stride = 1;
  for (const PacLayerSpec& spec : config.layers) {
    validate(spec);
    features = pac_layer(features, guidance, spec, config.options);
    if (spec.stride > 1) {
      guidance = average_pool(guidance, spec.stride);
      net_stride *= spec.stride;
    }
  }
  if (net_stride == 1) return features;
  return upsample_bilinear(features, scores.height(), scores.width(), net_stride);
}

}  // namespace pmp
