#include "pmp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <stdexcept>

#include "pmp/eval.hpp"

namespace pmp::synthetic {

namespace {

double color_distance(const Rgb& a, const Rgb& b) {
  return std::sqrt((a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) +
                   (a.b - b.b) * (a.b - b.b));
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

double bounding_radius(const ShapeSpec& s) {
  return s.kind == ShapeKind::kRectangle ? std::hypot(s.radius_x, s.radius_y)
                                         : std::max(s.radius_x, s.radius_y);
}

}  // namespace

bool shape_contains(const ShapeSpec& shape, double x, double y) {
  const double dx = x - shape.center_x, dy = y - shape.center_y;
  switch (shape.kind) {
    case ShapeKind::kDisk:
      return dx * dx + dy * dy <= shape.radius_x * shape.radius_x;
    case ShapeKind::kRectangle:
      return std::abs(dx) <= shape.radius_x && std::abs(dy) <= shape.radius_y;
    case ShapeKind::kEllipse: {
      const double u = dx / shape.radius_x, v = dy / shape.radius_y;
      return u * u + v * v <= 1.0;
    }
  }
  return false;
}

Rgb shape_color_at(const ShapeSpec& shape, double x, double y) {
  if (!shape.two_part) return shape.color;
  const double along = (x - shape.center_x) * std::cos(shape.part_angle) +
                       (y - shape.center_y) * std::sin(shape.part_angle);
  return along > shape.part_offset * std::max(shape.radius_x, shape.radius_y) ? shape.part_color
                                                                             : shape.color;
}

Scene gen_scene(const SceneSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.num_classes < 1 || spec.num_classes > 254) {
    throw Error(ErrorCode::kInvalidArgument, "scene needs positive size and 1..254 classes");
  }
  for (const ShapeSpec& s : spec.shapes) {
    if (s.class_id < 1 || s.class_id > spec.num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "shape class outside 1..C");
    }
    if (!(s.radius_x > 0.0 && s.radius_y > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "shape radii must be positive");
    }
    const double rx = s.radius_x;
    const double ry = s.kind == ShapeKind::kDisk ? s.radius_x : s.radius_y;
    if (s.center_x - rx < 0.0 || s.center_y - ry < 0.0 || s.center_x + rx > spec.width - 1 ||
        s.center_y + ry > spec.height - 1) {
      throw Error(ErrorCode::kInvalidArgument, "shape does not fit inside the scene");
    }
  }

  Rng rng(spec.rng_seed);
  const int h = spec.height, w = spec.width;
  const auto background_label = static_cast<std::uint8_t>(spec.num_classes + 1);
  Scene scene;
  scene.ground_truth = LabelMask(h, w, background_label);
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const ShapeSpec* owner = nullptr;
      for (const ShapeSpec& s : spec.shapes) {
        if (shape_contains(s, x, y)) owner = &s;
      }
      const Rgb base = owner ? shape_color_at(*owner, x, y) : spec.background;
      const double amp = owner ? owner->noise_amplitude : spec.background_noise;
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
      const double channel[3] = {base.r, base.g, base.b};
      for (int c = 0; c < 3; ++c) {
        const double noise = amp > 0.0 ? rng.uniform(-amp, amp) : 0.0;
        pixels[o + c] = to_byte(channel[c] + noise);
      }
      if (owner) scene.ground_truth(y, x) = static_cast<std::uint8_t>(owner->class_id);
    }
  }
  scene.image = RasterImage(h, w, std::move(pixels));

  std::vector<Point> points;
  std::set<std::pair<int, int>> used;
  for (const ShapeSpec& s : spec.shapes) {
    const int x = static_cast<int>(std::lround(s.center_x));
    const int y = static_cast<int>(std::lround(s.center_y));
    if (scene.ground_truth(y, x) != s.class_id || !used.emplace(x, y).second) {
      throw Error(ErrorCode::kPlacementFailure, "shape center is occluded");
    }
    points.push_back({s.class_id, x, y});
  }
  std::vector<int> background_pixels;
  for (int i = 0; i < h * w; ++i) {
    if (scene.ground_truth[i] == background_label) background_pixels.push_back(i);
  }
  const std::size_t wanted = 4 * spec.shapes.size();
  if (background_pixels.size() < wanted) {
    throw Error(ErrorCode::kPlacementFailure, "not enough background pixels for points");
  }
  std::size_t placed = 0;
  for (int attempt = 0; placed < wanted; ++attempt) {
    if (attempt > 1000 * static_cast<int>(wanted)) {
      throw Error(ErrorCode::kPlacementFailure, "could not sample distinct background points");
    }
    const int idx = background_pixels[rng.uniform_int(0, static_cast<int>(background_pixels.size()) - 1)];
    const int x = idx % w, y = idx / w;
    if (!used.emplace(x, y).second) continue;
    points.push_back({spec.num_classes + 1, x, y});
    ++placed;
  }
  scene.points = PointSet(spec.num_classes, std::move(points));
  return scene;
}

SceneSpec random_scene_spec(std::uint64_t seed, const SceneOptions& options) {
  if (options.min_shapes < 1 || options.max_shapes < options.min_shapes ||
      !(options.min_radius > 0.0) || options.max_radius < options.min_radius) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent scene options");
  }
  Rng rng(seed);
  SceneSpec spec;
  spec.height = options.height;
  spec.width = options.width;
  spec.num_classes = options.num_classes;
  spec.rng_seed = derive_seed(seed, 0x5eedULL);
  spec.background_noise = options.texture;

  // Background, one color per class, then one secondary part color per class when
  // two-part shapes are enabled; all pairwise separated.
  std::vector<Rgb> palette;
  const int colors = options.num_classes + 1 + (options.two_part_fraction > 0.0 ? options.num_classes : 0);
  for (int i = 0; i < colors; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < options.max_attempts && !placed; ++attempt) {
      Rgb c{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
      placed = std::all_of(palette.begin(), palette.end(), [&](const Rgb& o) {
        return color_distance(c, o) >= options.min_color_distance;
      });
      if (placed) palette.push_back(c);
    }
    if (!placed) throw Error(ErrorCode::kPlacementFailure, "cannot separate class colors");
  }
  spec.background = palette[0];

  const int count = rng.uniform_int(options.min_shapes, options.max_shapes);
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < options.max_attempts && !placed; ++attempt) {
      ShapeSpec s;
      s.kind = static_cast<ShapeKind>(rng.uniform_int(0, 2));
      s.class_id = rng.uniform_int(1, options.num_classes);
      s.radius_x = rng.uniform(options.min_radius, options.max_radius);
      s.radius_y = s.kind == ShapeKind::kDisk
                       ? s.radius_x
                       : rng.uniform(options.min_radius, options.max_radius);
      if (s.kind == ShapeKind::kRectangle) {
        s.radius_x *= 0.8;
        s.radius_y *= 0.8;
      }
      const double margin_x = s.radius_x + 1.0, margin_y = s.radius_y + 1.0;
      if (2 * margin_x >= options.width - 1 || 2 * margin_y >= options.height - 1) continue;
      s.center_x = std::round(rng.uniform(margin_x, options.width - 1 - margin_x));
      s.center_y = std::round(rng.uniform(margin_y, options.height - 1 - margin_y));
      if (s.center_x - s.radius_x < 0 || s.center_y - s.radius_y < 0 ||
          s.center_x + s.radius_x > options.width - 1 ||
          s.center_y + s.radius_y > options.height - 1) {
        continue;
      }
      s.color = palette[s.class_id];
      s.noise_amplitude = options.texture;
      if (options.two_part_fraction > 0.0 && rng.uniform() < options.two_part_fraction) {
        s.two_part = true;
        s.part_color = palette[options.num_classes + s.class_id];
        s.part_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        s.part_offset = rng.uniform(0.15, 0.35);
      }
      placed = std::all_of(spec.shapes.begin(), spec.shapes.end(), [&](const ShapeSpec& o) {
        return std::hypot(s.center_x - o.center_x, s.center_y - o.center_y) >=
               bounding_radius(s) + bounding_radius(o) + 3.0;
      });
      if (placed) spec.shapes.push_back(s);
    }
    if (!placed) throw Error(ErrorCode::kPlacementFailure, "cannot fit shape without overlap");
  }
  return spec;
}

SceneOptions ablation_scene_options() {
  SceneOptions o;
  o.height = 128;
  o.width = 128;
  o.num_classes = 3;
  o.min_radius = 16.0;
  o.max_radius = 32.0;
  o.texture = 0.12;
  o.two_part_fraction = 0.5;
  return o;
}

EpochSchedule ablation_schedule() { return make_schedule(10, 0.8, 0.1, LossMode::kHalving); }

PipelineConfig ablation_pipeline() { return PipelineConfig{}; }

std::vector<Scene> generate_scenes(int count, std::uint64_t master_seed,
                                   const SceneOptions& options) {
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (int i = 0; i < count; ++i) {
    // A crowded draw is redrawn from the next derived seed.
    for (int retry = 0;; ++retry) {
      const std::uint64_t seed =
          derive_seed(master_seed, (static_cast<std::uint64_t>(retry) << 32) | static_cast<unsigned>(i));
      try {
        scenes.push_back(gen_scene(random_scene_spec(seed, options)));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kPlacementFailure || retry + 1 >= options.max_attempts) throw;
      }
    }
  }
  return scenes;
}

ScoreStack oracle_scores(const LabelMask& ground_truth, int num_classes, double noise, Rng& rng) {
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise level must lie in [0, 1]");
  }
  check_labels(ground_truth, num_classes);
  const int planes = num_classes + 1;
  ScoreStack scores(planes, ground_truth.height(), ground_truth.width());
  std::vector<double> values(planes);
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    double sum = 0.0;
    for (int p = 0; p < planes; ++p) {
      const double onehot = ground_truth[i] == p + 1 ? 1.0 : 0.0;
      const double u = noise > 0.0 ? rng.uniform() : 0.0;
      values[p] = (1.0 - noise) * onehot + noise * u;
      sum += values[p];
    }
    const double scale = sum > 1.0 ? 1.0 / sum : 1.0;
    for (int p = 0; p < planes; ++p) scores.plane(p)[i] = values[p] * scale;
  }
  return scores;
}

double cross_entropy(const ScoreStack& scores, const LabelMask& ground_truth) {
  if (!ground_truth.same_shape(scores.height(), scores.width())) {
    throw Error(ErrorCode::kDimensionMismatch, "scores and ground truth differ in size");
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const int label = ground_truth[i];
    if (label == kIgnoreLabel) continue;
    total -= std::log(std::max(scores.plane(label - 1)[i], 1e-12));
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

void validate(const EpochSchedule& schedule) {
  if (schedule.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "schedule needs >= 1 epoch");
  if (static_cast<int>(schedule.score_noise.size()) != schedule.epochs) {
    throw Error(ErrorCode::kInvalidArgument, "noise schedule length differs from epochs");
  }
  if (schedule.mode == LossMode::kHalving &&
      static_cast<int>(schedule.loss.size()) != schedule.epochs) {
    throw Error(ErrorCode::kInvalidArgument, "loss schedule length differs from epochs");
  }
  for (std::size_t i = 0; i < schedule.score_noise.size(); ++i) {
    const double n = schedule.score_noise[i];
    if (!(n >= 0.0 && n <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "noise outside [0,1]");
    if (i > 0 && n > schedule.score_noise[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "noise schedule must not increase");
    }
  }
}

EpochSchedule make_schedule(int epochs, double noise_start, double noise_end, LossMode mode) {
  EpochSchedule s;
  s.epochs = epochs;
  s.mode = mode;
  for (int e = 0; e < epochs; ++e) {
    const double t = epochs > 1 ? static_cast<double>(e) / (epochs - 1) : 1.0;
    s.score_noise.push_back(noise_start + (noise_end - noise_start) * t);
  }
  if (mode == LossMode::kHalving) {
    double loss = s.initial_loss;
    for (int e = 0; e < epochs; ++e) {
      loss /= 2.0;
      s.loss.push_back(loss);
    }
  }
  validate(s);
  return s;
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kPointsOnly: return "points-only";
    case Variant::kBlotsOnly: return "blots-only";
    case Variant::kFieldsOnly: return "fields-only";
    case Variant::kFieldsBlots: return "fields+blots";
    case Variant::kFieldsRefiner: return "fields+refiner";
    case Variant::kFull: return "full";
  }
  return "unknown";
}

PipelineConfig variant_config(Variant variant, const PipelineConfig& base) {
  PipelineConfig c = base;
  c.use_fields = variant == Variant::kFieldsOnly || variant == Variant::kFieldsBlots ||
                 variant == Variant::kFieldsRefiner || variant == Variant::kFull;
  c.use_blots = variant == Variant::kBlotsOnly || variant == Variant::kFieldsBlots ||
                variant == Variant::kFull;
  c.use_refiner = variant == Variant::kFieldsRefiner || variant == Variant::kFull;
  return c;
}

double SimulationReport::miou(int epoch, Variant variant) const {
  for (const EpochRow& row : rows) {
    if (row.epoch == epoch && row.variant == variant) return row.mean_miou;
  }
  throw Error(ErrorCode::kOutOfRange, "no report row for that epoch and variant");
}

std::string SimulationReport::to_csv() const {
  std::string out = "epoch,variant,mean_mIoU,object_E,background_E\n";
  char line[160];
  for (const EpochRow& row : rows) {
    std::snprintf(line, sizeof(line), "%d,%s,%.6f,%.6f,%.6f\n", row.epoch,
                  std::string(to_string(row.variant)).c_str(), row.mean_miou, row.object_score,
                  row.background_score);
    out += line;
  }
  return out;
}

SimulationReport simulate_epochs(const std::vector<Scene>& scenes, const EpochSchedule& schedule,
                                 const SimulationConfig& config) {
  validate(schedule);
  if (scenes.empty()) throw Error(ErrorCode::kInvalidArgument, "simulation needs scenes");
  const int num_classes = scenes.front().points.num_classes();
  for (const Scene& s : scenes) {
    if (s.points.num_classes() != num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "scenes disagree on the class count");
    }
  }

  // Blots and bare-point masks depend only on the scene.
  std::vector<LabelMask> blots, point_masks;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    BlotConfig blot = config.pipeline.blot;
    blot.rng_seed = derive_seed(config.master_seed, 0xb10700000000ULL + i);
    blots.push_back(generate_blots(scenes[i].image, scenes[i].points, blot).mask);
    point_masks.push_back(
        points_mask(scenes[i].points, scenes[i].image.height(), scenes[i].image.width()));
  }

  ExpansionState state = make_expansion_state();
  state = update(state, schedule.initial_loss);
  SimulationReport report;
  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    const double noise = schedule.score_noise[epoch - 1];
    std::vector<ScoreStack> scores;
    double ce_total = 0.0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      Rng rng(derive_seed(config.master_seed, (std::uint64_t{static_cast<unsigned>(epoch)} << 32) | i));
      scores.push_back(oracle_scores(scenes[i].ground_truth, num_classes, noise, rng));
      ce_total += cross_entropy(scores.back(), scenes[i].ground_truth);
    }
    const double loss = schedule.mode == LossMode::kHalving
                            ? schedule.loss[epoch - 1]
                            : ce_total / static_cast<double>(scenes.size());
    state = update(state, loss);

    std::vector<ConfusionMatrix> matrices(kAllVariants.size(), ConfusionMatrix(num_classes));
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const Scene& scene = scenes[i];
      const ScoreStack refined = refine(scores[i], scene.image, config.pipeline.refine);
      const FieldStack fields = apply(
          build_aggregated_fields(scene.points, scene.image.height(), scene.image.width(),
                                  config.pipeline.normalization),
          state);
      const LabelMask raw_mask = assemble(scores[i], fields, config.pipeline.threshold);
      const LabelMask refined_mask = assemble(refined, fields, config.pipeline.threshold);
      for (std::size_t v = 0; v < kAllVariants.size(); ++v) {
        LabelMask prediction;
        switch (kAllVariants[v]) {
          case Variant::kPointsOnly: prediction = point_masks[i]; break;
          case Variant::kBlotsOnly: prediction = blots[i]; break;
          case Variant::kFieldsOnly: prediction = superimpose(raw_mask, point_masks[i]).labels; break;
          case Variant::kFieldsBlots: prediction = superimpose(raw_mask, blots[i]).labels; break;
          case Variant::kFieldsRefiner:
            prediction = superimpose(refined_mask, point_masks[i]).labels;
            break;
          case Variant::kFull: prediction = superimpose(refined_mask, blots[i]).labels; break;
        }
        accumulate(matrices[v], prediction, scene.ground_truth);
      }
    }
    for (std::size_t v = 0; v < kAllVariants.size(); ++v) {
      report.rows.push_back({epoch, kAllVariants[v], miou(matrices[v]).mean, state.object_score,
                             state.background_score});
    }
  }
  return report;
}

}  // namespace pmp::synthetic
