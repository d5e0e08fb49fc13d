#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "pmp/raster.hpp"

namespace pmp {

enum class FieldStage { kRawDistance, kConfidence, kAggregated, kExpanded };

std::string_view to_string(FieldStage stage);

// Divisor used when turning distances into confidences. kDiagonal uses the image
// diagonal; kPlaneMax uses the largest distance in the plane itself.
enum class FieldNormalization { kDiagonal, kPlaneMax };

std::string_view to_string(FieldNormalization normalization);
FieldNormalization parse_field_normalization(std::string_view text);

// (C+1) x H x W per-class fields plus the processing stage they are in.
// `present[p]` is false for classes without any annotated point; those planes hold
// the neutral value for their stage and never compete in an argmax.
struct FieldStack {
  PlaneStack planes;
  FieldStage stage = FieldStage::kRawDistance;
  std::vector<bool> present;

  int num_planes() const noexcept { return planes.num_planes(); }
  int height() const noexcept { return planes.height(); }
  int width() const noexcept { return planes.width(); }
  int background_plane() const noexcept { return planes.num_planes() - 1; }
};

// Exact Euclidean distance from every pixel to the nearest of `points`, using the
// separable two-pass lower-envelope transform on squared distances (linear in H*W).
// Throws EmptyPointSet when `points` is empty.
Plane compute_distance_field(std::span<const Point> points, int height, int width);

double image_diagonal(int height, int width);

// max(0, 1 - d / sqrt(H^2 + W^2)); seeds map to exactly 1.
Plane to_confidence(const Plane& distance, int height, int width);

// max(0, 1 - d / max(d)); a plane whose maximum is 0 maps to all ones.
Plane to_confidence_plane_max(const Plane& distance);

// Raw distance planes for every class 1..C+1. Absent classes get the diagonal
// everywhere, which converts to an all-zero confidence plane.
FieldStack compute_distance_fields(const PointSet& points, int height, int width);

FieldStack to_confidence(const FieldStack& raw,
                         FieldNormalization normalization = FieldNormalization::kDiagonal);

// F_c <- F_c * (1 - F_bg) for every object plane; background unchanged.
FieldStack aggregate(const FieldStack& confidence);

// compute_distance_fields -> to_confidence -> aggregate.
FieldStack build_aggregated_fields(
    const PointSet& points, int height, int width,
    FieldNormalization normalization = FieldNormalization::kDiagonal);

}  // namespace pmp
