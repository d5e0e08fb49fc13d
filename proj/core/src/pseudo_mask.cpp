#include "pmp/pseudo_mask.hpp"

#include <chrono>

namespace pmp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

LabelMask argmax_threshold(const ScoreStack& features, const PlaneStack* fields,
                           const std::vector<bool>& present, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
  }
  if (static_cast<int>(present.size()) != features.num_planes()) {
    throw Error(ErrorCode::kDimensionMismatch, "class presence does not match plane count");
  }
  LabelMask mask(features.height(), features.width(), kIgnoreLabel);
  const std::size_t n = features.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    int best = -1;
    double best_value = 0.0;
    for (int p = 0; p < features.num_planes(); ++p) {
      if (!present[p]) continue;
      double v = features.plane(p)[i];
      if (fields) v *= fields->plane(p)[i];
      if (best < 0 || v > best_value) {
        best = p;
        best_value = v;
      }
    }
    if (best >= 0 && best_value >= threshold) mask[i] = static_cast<std::uint8_t>(best + 1);
  }
  return mask;
}

}  // namespace

LabelMask assemble(const ScoreStack& refined, const FieldStack& fields, double threshold) {
  if (!refined.same_shape(fields.planes)) {
    throw Error(ErrorCode::kDimensionMismatch, "scores and fields differ in shape");
  }
  if (fields.stage != FieldStage::kExpanded && fields.stage != FieldStage::kAggregated) {
    throw Error(ErrorCode::kStageMismatch, "assemble needs aggregated or expanded fields");
  }
  return argmax_threshold(refined, &fields.planes, fields.present, threshold);
}

LabelMask threshold_scores(const ScoreStack& features, const std::vector<bool>& present,
                           double threshold) {
  return argmax_threshold(features, nullptr, present, threshold);
}

PseudoMask superimpose(const LabelMask& intermediate, const LabelMask& blots) {
  if (!intermediate.same_shape(blots)) {
    throw Error(ErrorCode::kDimensionMismatch, "blot mask differs in size");
  }
  PseudoMask out{intermediate, Grid<std::uint8_t>(intermediate.height(), intermediate.width())};
  for (std::size_t i = 0; i < intermediate.size(); ++i) {
    if (blots[i] != kIgnoreLabel) {
      out.labels[i] = blots[i];
      out.provenance[i] = static_cast<std::uint8_t>(LabelSource::kBlot);
    } else if (intermediate[i] != kIgnoreLabel) {
      out.provenance[i] = static_cast<std::uint8_t>(LabelSource::kThresholded);
    }
  }
  return out;
}

PipelineResult run_pipeline_with_blots(const RasterImage& image, const PointSet& points,
                                       const ScoreStack& scores, const ExpansionState& expansion,
                                       const PipelineConfig& config, const LabelMask& blots) {
  const auto start = Clock::now();
  const int h = image.height(), w = image.width();
  if (scores.height() != h || scores.width() != w) {
    throw Error(ErrorCode::kDimensionMismatch, "score stack and image differ in size");
  }
  if (scores.num_planes() != points.num_classes() + 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "score stack has " + std::to_string(scores.num_planes()) + " planes, expected " +
                    std::to_string(points.num_classes() + 1));
  }
  if (!blots.same_shape(h, w)) throw Error(ErrorCode::kDimensionMismatch, "blot mask size");
  points.check_bounds(h, w);

  PipelineResult result;
  result.blots = blots;
  result.features = config.use_refiner ? refine(scores, image, config.refine) : scores;

  if (config.use_fields) {
    result.fields = apply(build_aggregated_fields(points, h, w, config.normalization), expansion);
    result.intermediate = assemble(result.features, result.fields, config.threshold);
  } else if (config.use_refiner) {
    std::vector<bool> present(scores.num_planes());
    for (int p = 0; p < scores.num_planes(); ++p) present[p] = points.has_class(p + 1);
    result.intermediate = threshold_scores(result.features, present, config.threshold);
  } else {
    result.intermediate = LabelMask(h, w, kIgnoreLabel);
  }
  result.mask = superimpose(result.intermediate, result.blots);
  result.other_seconds = seconds_since(start);
  return result;
}

PipelineResult run_pipeline(const RasterImage& image, const PointSet& points,
                            const ScoreStack& scores, const ExpansionState& expansion,
                            const PipelineConfig& config) {
  const auto start = Clock::now();
  LabelMask blots = config.use_blots ? generate_blots(image, points, config.blot).mask
                                     : points_mask(points, image.height(), image.width());
  const double blot_seconds = seconds_since(start);
  PipelineResult result =
      run_pipeline_with_blots(image, points, scores, expansion, config, blots);
  result.blot_seconds = blot_seconds;
  return result;
}

}  // namespace pmp
