#include "pmp/distance_fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional squared-distance transform of a sampled function (lower envelope
// of parabolas rooted at finite samples). Entries of `f` that are +inf are not
// sites. Writes the result into `d`; `v` and `z` are scratch of size n and n+1.
void squared_transform_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v,
                          std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s > z[k]) break;
      --k;  // z[0] is -inf, so k never drops below 0
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = static_cast<double>(q - v[j]);
    d[q] = diff * diff + f[v[j]];
  }
}

void require_stage(const FieldStack& stack, FieldStage expected) {
  if (stack.stage != expected) {
    throw Error(ErrorCode::kStageMismatch, "expected " + std::string(to_string(expected)) +
                                               " fields, got " +
                                               std::string(to_string(stack.stage)));
  }
}

}  // namespace

std::string_view to_string(FieldStage stage) {
  switch (stage) {
    case FieldStage::kRawDistance: return "raw-distance";
    case FieldStage::kConfidence: return "confidence";
    case FieldStage::kAggregated: return "aggregated";
    case FieldStage::kExpanded: return "expanded";
  }
  return "unknown";
}

std::string_view to_string(FieldNormalization normalization) {
  return normalization == FieldNormalization::kPlaneMax ? "plane-max" : "diagonal";
}

FieldNormalization parse_field_normalization(std::string_view text) {
  if (text == "diagonal") return FieldNormalization::kDiagonal;
  if (text == "plane-max") return FieldNormalization::kPlaneMax;
  throw Error(ErrorCode::kParseError, "unknown field normalization '" + std::string(text) + "'");
}

double image_diagonal(int height, int width) {
  return std::sqrt(static_cast<double>(height) * height + static_cast<double>(width) * width);
}

Plane compute_distance_field(std::span<const Point> points, int height, int width) {
  if (points.empty()) {
    throw Error(ErrorCode::kEmptyPointSet, "distance field needs at least one point");
  }
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "distance field dimensions must be positive");
  }
  Plane squared(height, width, kInf);
  for (const Point& p : points) {
    if (p.x < 0 || p.x >= width || p.y < 0 || p.y >= height) {
      throw Error(ErrorCode::kOutOfRange, "seed outside raster");
    }
    squared(p.y, p.x) = 0.0;
  }

  const int longest = std::max(height, width);
  std::vector<double> f(longest), d(longest), z(longest + 1);
  std::vector<int> v(longest);

  // Columns first.
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) f[y] = squared(y, x);
    squared_transform_1d({f.data(), static_cast<std::size_t>(height)},
                         {d.data(), static_cast<std::size_t>(height)}, v, z);
    for (int y = 0; y < height; ++y) squared(y, x) = d[y];
  }
  // Then rows, in place.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) f[x] = squared(y, x);
    squared_transform_1d({f.data(), static_cast<std::size_t>(width)},
                         {d.data(), static_cast<std::size_t>(width)}, v, z);
    for (int x = 0; x < width; ++x) squared(y, x) = std::sqrt(d[x]);
  }
  return squared;
}

Plane to_confidence(const Plane& distance, int height, int width) {
  if (!distance.same_shape(height, width)) {
    throw Error(ErrorCode::kDimensionMismatch, "distance plane does not match dimensions");
  }
  const double diagonal = image_diagonal(height, width);
  Plane out(height, width);
  for (std::size_t i = 0; i < distance.size(); ++i) {
    out[i] = std::max(0.0, 1.0 - distance[i] / diagonal);
  }
  return out;
}

Plane to_confidence_plane_max(const Plane& distance) {
  const auto values = distance.values();
  const double top = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  Plane out(distance.height(), distance.width(), 1.0);
  if (top <= 0.0) return out;
  for (std::size_t i = 0; i < distance.size(); ++i) {
    out[i] = std::max(0.0, 1.0 - distance[i] / top);
  }
  return out;
}

FieldStack compute_distance_fields(const PointSet& points, int height, int width) {
  points.check_bounds(height, width);
  const int num_planes = points.num_classes() + 1;
  FieldStack out{PlaneStack(num_planes, height, width, image_diagonal(height, width)),
                 FieldStage::kRawDistance, std::vector<bool>(num_planes, false)};
  for (int p = 0; p < num_planes; ++p) {
    auto seeds = points.of_class(p + 1);
    if (seeds.empty()) continue;
    out.present[p] = true;
    out.planes.set_plane(p, compute_distance_field(seeds, height, width));
  }
  return out;
}

FieldStack to_confidence(const FieldStack& raw, FieldNormalization normalization) {
  require_stage(raw, FieldStage::kRawDistance);
  FieldStack out{PlaneStack(raw.num_planes(), raw.height(), raw.width()),
                 FieldStage::kConfidence, raw.present};
  for (int p = 0; p < raw.num_planes(); ++p) {
    if (!raw.present[p]) continue;
    const Plane distance = raw.planes.plane_grid(p);
    out.planes.set_plane(p, normalization == FieldNormalization::kPlaneMax
                                ? to_confidence_plane_max(distance)
                                : to_confidence(distance, raw.height(), raw.width()));
  }
  return out;
}

FieldStack aggregate(const FieldStack& confidence) {
  require_stage(confidence, FieldStage::kConfidence);
  FieldStack out = confidence;
  out.stage = FieldStage::kAggregated;
  const auto background = confidence.planes.plane(confidence.background_plane());
  for (int p = 0; p < confidence.background_plane(); ++p) {
    auto plane = out.planes.plane(p);
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] *= 1.0 - background[i];
  }
  return out;
}

FieldStack build_aggregated_fields(const PointSet& points, int height, int width,
                                   FieldNormalization normalization) {
  return aggregate(to_confidence(compute_distance_fields(points, height, width), normalization));
}

}  // namespace pmp
