#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pmp/expansion.hpp"
#include "pmp/pseudo_mask.hpp"
#include "pmp/raster.hpp"
#include "pmp/rng.hpp"

namespace pmp::synthetic {

enum class ShapeKind { kDisk, kRectangle, kEllipse };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::kDisk;
  int class_id = 1;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius_x = 1.0;  // disk radius, rectangle half-width, ellipse semi-axis
  double radius_y = 1.0;
  Rgb color;
  double noise_amplitude = 0.0;  // additive U(-a, a) per channel
  // Optional second part: pixels whose offset from the center, projected onto the
  // direction part_angle (radians), exceeds part_offset * max radius use part_color.
  bool two_part = false;
  Rgb part_color;
  double part_angle = 0.0;
  double part_offset = 0.0;
};

struct SceneSpec {
  int height = 64;
  int width = 64;
  int num_classes = 1;
  std::vector<ShapeSpec> shapes;
  Rgb background;
  double background_noise = 0.0;
  std::uint64_t rng_seed = 0;
};

struct Scene {
  RasterImage image;
  LabelMask ground_truth;
  PointSet points;
};

bool shape_contains(const ShapeSpec& shape, double x, double y);

// Color of a pixel known to lie inside `shape`.
Rgb shape_color_at(const ShapeSpec& shape, double x, double y);

// Renders the shapes (later shapes paint over earlier ones) with texture noise,
// then emits one point at each shape's center and four background points per shape
// drawn uniformly from pixels outside every shape.
// Throws InvalidArgument for malformed specs, PlacementFailure when points cannot be placed.
Scene gen_scene(const SceneSpec& spec);

struct SceneOptions {
  int height = 64;
  int width = 64;
  int num_classes = 3;
  int min_shapes = 1;
  int max_shapes = 3;
  double min_radius = 8.0;
  double max_radius = 16.0;
  double min_color_distance = 0.35;  // between any two class / background colors
  double texture = 0.04;
  double two_part_fraction = 0.0;  // probability that a shape gets a second colored part
  int max_attempts = 200;
};

// Non-overlapping shapes with well-separated class colors. Throws PlacementFailure
// if the shapes cannot be fitted within the attempt budget.
SceneSpec random_scene_spec(std::uint64_t seed, const SceneOptions& options = {});

// (1 - noise) * one-hot(ground truth) + noise * U(0,1), divided by the pixel's
// plane sum wherever that sum exceeds 1. Ignore pixels carry noise only.
ScoreStack oracle_scores(const LabelMask& ground_truth, int num_classes, double noise, Rng& rng);

// Mean per-pixel cross-entropy of scores against the ground truth.
double cross_entropy(const ScoreStack& scores, const LabelMask& ground_truth);

enum class LossMode { kHalving, kCrossEntropy };

struct EpochSchedule {
  int epochs = 0;
  std::vector<double> score_noise;  // per epoch, non-increasing, in [0, 1]
  std::vector<double> loss;         // per epoch
  double initial_loss = 1.0;        // loss before the first epoch
  LossMode mode = LossMode::kHalving;
};

void validate(const EpochSchedule& schedule);

// Linear noise ramp from noise_start to noise_end. Halving losses start at
// initial_loss and halve every epoch; cross-entropy losses are filled in by the
// simulation from the oracle scores it draws.
EpochSchedule make_schedule(int epochs, double noise_start, double noise_end,
                            LossMode mode = LossMode::kHalving);

enum class Variant { kPointsOnly, kBlotsOnly, kFieldsOnly, kFieldsBlots, kFieldsRefiner, kFull };

inline constexpr std::array<Variant, 6> kAllVariants = {
    Variant::kPointsOnly,  Variant::kBlotsOnly,     Variant::kFieldsOnly,
    Variant::kFieldsBlots, Variant::kFieldsRefiner, Variant::kFull};

std::string_view to_string(Variant variant);
PipelineConfig variant_config(Variant variant, const PipelineConfig& base);

struct SimulationConfig {
  PipelineConfig pipeline;
  std::uint64_t master_seed = 0;
};

struct EpochRow {
  int epoch = 0;
  Variant variant = Variant::kFull;
  double mean_miou = 0.0;
  double object_score = 0.0;
  double background_score = 0.0;
};

struct SimulationReport {
  std::vector<EpochRow> rows;

  double miou(int epoch, Variant variant) const;
  std::string to_csv() const;
};

// Per epoch: draws oracle scores at the scheduled noise, advances the expansion state
// with the scheduled loss, runs every ablation variant and scores it against ground truth
// (dataset-level mIoU from the summed confusion matrices).
SimulationReport simulate_epochs(const std::vector<Scene>& scenes, const EpochSchedule& schedule,
                                 const SimulationConfig& config);

// Settings of the standard ablation-ordering run: 128 x 128 scenes with three object
// classes, half of the shapes two-part, score noise falling from 0.8 to 0.1 over ten
// halving-loss epochs, default pipeline.
SceneOptions ablation_scene_options();
EpochSchedule ablation_schedule();
PipelineConfig ablation_pipeline();

// `count` scenes from random_scene_spec with seeds derived from master_seed; a scene
// whose shapes cannot be placed is redrawn from a fresh derived seed.
std::vector<Scene> generate_scenes(int count, std::uint64_t master_seed,
                                   const SceneOptions& options = {});

}  // namespace pmp::synthetic
