#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "pmp/raster.hpp"

namespace pmp {

enum class KernelVariant {
  kExpRatio,  // exp(-delta / (sigma + eps)) * mu, L1-normalized
  kLiteral,   // -delta / (sigma + eps) * mu, unnormalized
};

std::string_view to_string(KernelVariant variant);
KernelVariant parse_kernel_variant(std::string_view text);

inline constexpr double kKernelEpsilon = 1e-6;

struct PacLayerSpec {
  int kernel_size = 3;  // 3, 5 or 7
  int dilation = 1;
  int stride = 1;       // 1 or 2

  friend bool operator==(const PacLayerSpec&, const PacLayerSpec&) = default;
};

void validate(const PacLayerSpec& spec);

// The 12-layer refinement stack: kernels 7,7,5,5,3x8; dilations 1,1,2,2,4,4,...,32,32;
// strides 2 for the first four layers, 1 afterwards.
std::vector<PacLayerSpec> default_pac_layers();

// Parses one `kernel_size dilation stride` triple per line (# comments allowed).
std::vector<PacLayerSpec> parse_pac_layers(std::string_view text);

// Dilation actually used on an input of the given size when capping is on:
// min(dilation, max(1, (min(h, w) - 1) / (kernel_size - 1))).
int effective_dilation(const PacLayerSpec& spec, int height, int width, bool cap);

// Statistics that define one window's kernel.
struct KernelContext {
  double sigma = 0.0;          // std-dev of guidance intensities, channels pooled
  double mu = 0.0;             // mean of the feature window
  std::vector<double> delta;   // color distance from the center tap to each tap
};

// Window taps are listed row-major; the center tap is at index size / 2.
KernelContext kernel_context(std::span<const Rgb> guidance_window,
                             std::span<const double> feature_window);
std::vector<double> compute_kernel(std::span<const Rgb> guidance_window,
                                   std::span<const double> feature_window, KernelVariant variant);

struct PacOptions {
  KernelVariant variant = KernelVariant::kExpRatio;
  bool cap_dilation = true;
};

// Three-plane channel-major copy of an image's [0,1] samples.
PlaneStack guidance_from_image(const RasterImage& image);
// Average-pools by `factor` in each direction; partial edge blocks average what they cover.
PlaneStack average_pool(const PlaneStack& stack, int factor);
// Bilinear resampling where output pixel Y samples input coordinate Y / scale.
PlaneStack upsample_bilinear(const PlaneStack& stack, int height, int width, int scale);

// One pixel-adaptive layer. `guidance` must share the feature resolution.
// Output is ceil(H / stride) x ceil(W / stride); taps outside the raster replicate the edge.
PlaneStack pac_layer(const PlaneStack& features, const PlaneStack& guidance,
                     const PacLayerSpec& spec, const PacOptions& options = {});

struct RefineConfig {
  std::vector<PacLayerSpec> layers = default_pac_layers();
  PacOptions options;
};

// Runs every layer in order with the guidance average-pooled to each layer's input
// resolution, then bilinearly restores the input resolution. No learned parameters.
ScoreStack refine(const ScoreStack& scores, const RasterImage& image,
                  const RefineConfig& config = {});

}  // namespace pmp
