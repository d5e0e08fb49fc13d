#pragma once

#include <cstdint>
#include <vector>

#include "pmp/distance_fields.hpp"
#include "pmp/expansion.hpp"
#include "pmp/pac_refiner.hpp"
#include "pmp/point_blot.hpp"
#include "pmp/raster.hpp"

namespace pmp {

inline constexpr double kDefaultMaskThreshold = 0.75;

enum class LabelSource : std::uint8_t { kIgnore = 0, kThresholded = 1, kBlot = 2 };

struct PseudoMask {
  LabelMask labels;
  Grid<std::uint8_t> provenance;  // LabelSource per pixel
};

// P_c = refined_c * field_c for every present class (background included); a pixel
// takes the argmax class when its product reaches `threshold`, ties to the lower id.
LabelMask assemble(const ScoreStack& refined, const FieldStack& fields,
                   double threshold = kDefaultMaskThreshold);

// Thresholds features directly, restricted to `present` planes.
LabelMask threshold_scores(const ScoreStack& features, const std::vector<bool>& present,
                           double threshold = kDefaultMaskThreshold);

// Blot labels override the intermediate mask wherever a blot exists.
PseudoMask superimpose(const LabelMask& intermediate, const LabelMask& blots);

struct PipelineConfig {
  bool use_fields = true;
  bool use_blots = true;
  bool use_refiner = true;
  double threshold = kDefaultMaskThreshold;
  FieldNormalization normalization = FieldNormalization::kDiagonal;
  BlotConfig blot;
  RefineConfig refine;
};

struct PipelineResult {
  PseudoMask mask;
  LabelMask intermediate;
  LabelMask blots;       // point blots, or bare points when blots are disabled
  FieldStack fields;     // expanded fields (empty when fields are disabled)
  ScoreStack features;   // refined scores, or the inputs when the refiner is off
  double blot_seconds = 0.0;
  double other_seconds = 0.0;
};

// blots -> fields -> expansion -> refine -> assemble -> superimpose. Disabled stages
// fall back the same way the ablation rows do: bare points replace blots, and
// without fields the (refined or raw) scores are thresholded alone. With neither
// fields nor refiner there is no thresholded layer at all.
PipelineResult run_pipeline(const RasterImage& image, const PointSet& points,
                            const ScoreStack& scores, const ExpansionState& expansion,
                            const PipelineConfig& config = {});

// Same as run_pipeline with blots computed elsewhere.
PipelineResult run_pipeline_with_blots(const RasterImage& image, const PointSet& points,
                                       const ScoreStack& scores, const ExpansionState& expansion,
                                       const PipelineConfig& config, const LabelMask& blots);

}  // namespace pmp
