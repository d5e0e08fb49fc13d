#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmp/random_walker.hpp"
#include "pmp/raster.hpp"
#include "pmp/rng.hpp"

namespace pmp {

struct BlotConfig {
  int iterations = 5;               // perturb-and-walk rounds
  double kld_threshold = 0.5;       // accept only if divergence is below this
  double iou_threshold = 0.3;       // accept only if IoU with the current blob is above this
  double rotation_base_deg = 5.0;   // round t samples angles in +-t * base
  double translation_base = 0.02;   // round t samples shifts in +-t * base * min(H, W)
  int histogram_bins = 32;
  std::uint64_t rng_seed = 0;
  double tau_rw = kDefaultTauRw;
  WalkerParams walker;
};

void validate(const BlotConfig& config);

// A point carrying the index of the annotated point it descends from.
struct TrackedPoint {
  int source = 0;
  Point point;
};

struct Blob {
  int class_id = 0;
  std::vector<int> pixels;      // ascending linear indices
  std::vector<int> provenance;  // ascending source indices of seeds inside the blob
};

using BlobSet = std::vector<Blob>;

struct AffinePerturbation {
  double angle_deg = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

// Round t (1-based): angle ~ U(-t*base, t*base), each shift ~ U(-t*s*min(H,W), +...).
AffinePerturbation sample_perturbation(int round, const BlotConfig& config, int height, int width,
                                       Rng& rng);

// Rotates about the image center ((W-1)/2, (H-1)/2), translates, rounds to the
// nearest pixel and drops points that leave the raster. When two points land on
// one pixel the first keeps it.
std::vector<TrackedPoint> apply_perturbation(const PointSet& points,
                                             const AffinePerturbation& perturbation, int height,
                                             int width);

PointSet perturb_points(const PointSet& points, int round, const BlotConfig& config, int height,
                        int width, Rng& rng);

// 4-connected components of every labeled class (union-find). Blobs are ordered by
// their first pixel in raster order; provenance lists the seeds each one contains.
BlobSet connected_components(const LabelMask& mask, std::span<const TrackedPoint> seeds = {});

// Symmetrized KL divergence of per-channel color histograms (bins over [0,1],
// +1e-6 smoothing before normalization), summed over the three channels.
double blob_divergence(const RasterImage& image, std::span<const int> pixels_a,
                       std::span<const int> pixels_b, int bins);

double pixel_iou(std::span<const int> a, std::span<const int> b);

bool accept_candidate(const RasterImage& image, std::span<const int> current,
                      std::span<const int> candidate, double kld_threshold, double iou_threshold,
                      int bins);

struct BlotResult {
  LabelMask mask;
  std::vector<LabelMask> history;  // initial walker mask, then the mask after each round
  int accepted = 0;
  int rejected = 0;
};

// Initial walker mask, then `iterations` rounds of perturb -> walk -> split into
// blobs -> accept candidates matched by provenance -> union into the mask.
BlotResult generate_blots(const RasterImage& image, const PointSet& points,
                          const BlotConfig& config = {});

// Mask holding only the annotated pixels; used in place of blots when they are disabled.
LabelMask points_mask(const PointSet& points, int height, int width);

}  // namespace pmp
