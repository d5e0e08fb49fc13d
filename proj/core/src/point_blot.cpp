#include "pmp/point_blot.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

namespace pmp {

namespace {

constexpr double kHistogramSmoothing = 1e-6;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // The smaller index becomes the root, so roots are each set's first pixel.
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<int> parent_;
};

std::vector<double> channel_histogram(const RasterImage& image, std::span<const int> pixels,
                                      int channel, int bins) {
  std::vector<double> hist(bins, kHistogramSmoothing);
  const auto bytes = image.normalized();
  for (int pixel : pixels) {
    const double v = bytes[static_cast<std::size_t>(pixel) * 3 + channel];
    const int bin = std::min(bins - 1, static_cast<int>(v * bins));
    hist[bin] += 1.0;
  }
  const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
  for (double& h : hist) h /= total;
  return hist;
}

}  // namespace

void validate(const BlotConfig& config) {
  if (config.iterations < 0) throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 0");
  if (!(config.kld_threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "phi must be > 0");
  if (!(config.iou_threshold > 0.0 && config.iou_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "delta must lie in (0, 1)");
  }
  if (!(config.rotation_base_deg > 0.0) || !(config.translation_base > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "perturbation bases must be > 0");
  }
  if (config.histogram_bins < 1) throw Error(ErrorCode::kInvalidArgument, "bins must be >= 1");
  if (!(config.tau_rw > 0.5 && config.tau_rw <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau_rw must lie in (0.5, 1]");
  }
}

AffinePerturbation sample_perturbation(int round, const BlotConfig& config, int height, int width,
                                       Rng& rng) {
  const double angle = round * config.rotation_base_deg;
  const double shift = round * config.translation_base * std::min(height, width);
  AffinePerturbation p;
  p.angle_deg = rng.uniform(-angle, angle);
  p.dx = rng.uniform(-shift, shift);
  p.dy = rng.uniform(-shift, shift);
  return p;
}

std::vector<TrackedPoint> apply_perturbation(const PointSet& points,
                                             const AffinePerturbation& perturbation, int height,
                                             int width) {
  const double theta = perturbation.angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  std::vector<TrackedPoint> out;
  std::vector<bool> taken(static_cast<std::size_t>(height) * width, false);
  const auto& entries = points.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double rx = entries[i].x - cx, ry = entries[i].y - cy;
    const double nx = std::round(cx + c * rx - s * ry + perturbation.dx);
    const double ny = std::round(cy + s * rx + c * ry + perturbation.dy);
    if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
    const int x = static_cast<int>(nx), y = static_cast<int>(ny);
    const std::size_t idx = static_cast<std::size_t>(y) * width + x;
    if (taken[idx]) continue;
    taken[idx] = true;
    out.push_back({static_cast<int>(i), {entries[i].class_id, x, y}});
  }
  return out;
}

PointSet perturb_points(const PointSet& points, int round, const BlotConfig& config, int height,
                        int width, Rng& rng) {
  const auto moved =
      apply_perturbation(points, sample_perturbation(round, config, height, width, rng), height,
                         width);
  std::vector<Point> entries;
  entries.reserve(moved.size());
  for (const TrackedPoint& t : moved) entries.push_back(t.point);
  return PointSet(points.num_classes(), std::move(entries));
}

BlobSet connected_components(const LabelMask& mask, std::span<const TrackedPoint> seeds) {
  const int h = mask.height(), w = mask.width();
  DisjointSets sets(mask.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t label = mask(y, x);
      if (label == kIgnoreLabel) continue;
      const int idx = y * w + x;
      if (x + 1 < w && mask(y, x + 1) == label) sets.unite(idx, idx + 1);
      if (y + 1 < h && mask(y + 1, x) == label) sets.unite(idx, idx + w);
    }
  }
  BlobSet blobs;
  std::unordered_map<int, std::size_t> blob_of_root;
  for (int idx = 0; idx < static_cast<int>(mask.size()); ++idx) {
    if (mask[idx] == kIgnoreLabel) continue;
    const int root = sets.find(idx);
    auto [it, inserted] = blob_of_root.emplace(root, blobs.size());
    if (inserted) blobs.push_back({mask[idx], {}, {}});
    blobs[it->second].pixels.push_back(idx);
  }
  for (const TrackedPoint& seed : seeds) {
    const int idx = seed.point.y * w + seed.point.x;
    if (mask[idx] != seed.point.class_id) continue;
    blobs[blob_of_root.at(sets.find(idx))].provenance.push_back(seed.source);
  }
  for (Blob& blob : blobs) {
    std::sort(blob.provenance.begin(), blob.provenance.end());
    blob.provenance.erase(std::unique(blob.provenance.begin(), blob.provenance.end()),
                          blob.provenance.end());
  }
  return blobs;
}

double blob_divergence(const RasterImage& image, std::span<const int> pixels_a,
                       std::span<const int> pixels_b, int bins) {
  if (pixels_a.empty() || pixels_b.empty()) {
    throw Error(ErrorCode::kEmptyBlob, "divergence needs two non-empty blobs");
  }
  if (bins < 1) throw Error(ErrorCode::kInvalidArgument, "bins must be >= 1");
  double total = 0.0;
  for (int channel = 0; channel < 3; ++channel) {
    const auto p = channel_histogram(image, pixels_a, channel, bins);
    const auto q = channel_histogram(image, pixels_b, channel, bins);
    double kl_pq = 0.0, kl_qp = 0.0;
    for (int b = 0; b < bins; ++b) {
      kl_pq += p[b] * std::log(p[b] / q[b]);
      kl_qp += q[b] * std::log(q[b] / p[b]);
    }
    total += 0.5 * (kl_pq + kl_qp);
  }
  return total;
}

double pixel_iou(std::span<const int> a, std::span<const int> b) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

bool accept_candidate(const RasterImage& image, std::span<const int> current,
                      std::span<const int> candidate, double kld_threshold, double iou_threshold,
                      int bins) {
  if (pixel_iou(current, candidate) <= iou_threshold) return false;
  return blob_divergence(image, current, candidate, bins) < kld_threshold;
}

LabelMask points_mask(const PointSet& points, int height, int width) {
  points.check_bounds(height, width);
  LabelMask mask(height, width, kIgnoreLabel);
  for (const Point& p : points.entries()) {
    if (mask(p.y, p.x) == kIgnoreLabel) mask(p.y, p.x) = static_cast<std::uint8_t>(p.class_id);
  }
  return mask;
}

BlotResult generate_blots(const RasterImage& image, const PointSet& points,
                          const BlotConfig& config) {
  validate(config);
  const int h = image.height(), w = image.width();
  points.check_bounds(h, w);

  std::vector<TrackedPoint> originals;
  for (std::size_t i = 0; i < points.size(); ++i) {
    originals.push_back({static_cast<int>(i), points.entries()[i]});
  }

  BlotResult result;
  result.mask = walker_mask(solve_walker(image, points, config.walker), config.tau_rw);
  result.history.push_back(result.mask);

  Rng rng(config.rng_seed);
  for (int round = 1; round <= config.iterations; ++round) {
    const AffinePerturbation perturbation = sample_perturbation(round, config, h, w, rng);
    const auto moved = apply_perturbation(points, perturbation, h, w);
    if (moved.empty()) {
      result.history.push_back(result.mask);
      continue;
    }
    std::vector<Point> seeds;
    for (const TrackedPoint& t : moved) seeds.push_back(t.point);
    const LabelMask candidate_mask = walker_mask(
        solve_walker(image, PointSet(points.num_classes(), std::move(seeds)), config.walker),
        config.tau_rw);

    const BlobSet current = connected_components(result.mask, originals);
    std::vector<int> blob_of_source(points.size(), -1);
    for (std::size_t b = 0; b < current.size(); ++b) {
      for (int source : current[b].provenance) blob_of_source[source] = static_cast<int>(b);
    }

    for (const Blob& candidate : connected_components(candidate_mask, moved)) {
      if (candidate.provenance.empty()) continue;
      std::vector<int> matched;
      for (int source : candidate.provenance) {
        const int b = blob_of_source[source];
        if (b >= 0 && current[b].class_id == candidate.class_id) matched.push_back(b);
      }
      std::sort(matched.begin(), matched.end());
      matched.erase(std::unique(matched.begin(), matched.end()), matched.end());
      if (matched.empty()) continue;

      std::vector<int> reference;
      for (int b : matched) {
        reference.insert(reference.end(), current[b].pixels.begin(), current[b].pixels.end());
      }
      std::sort(reference.begin(), reference.end());

      if (!accept_candidate(image, reference, candidate.pixels, config.kld_threshold,
                            config.iou_threshold, config.histogram_bins)) {
        ++result.rejected;
        continue;
      }
      ++result.accepted;
      for (int pixel : candidate.pixels) {
        if (result.mask[pixel] == kIgnoreLabel) {
          result.mask[pixel] = static_cast<std::uint8_t>(candidate.class_id);
        }
      }
    }
    result.history.push_back(result.mask);
  }
  return result;
}

}  // namespace pmp
