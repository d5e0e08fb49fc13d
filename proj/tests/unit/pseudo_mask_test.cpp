#include <gtest/gtest.h>

#include "pmp/pseudo_mask.hpp"
#include "pmp/rng.hpp"
#include "pmp/synthetic.hpp"
#include "support/oracles.hpp"

namespace pmp {
namespace {

FieldStack expanded(int planes, int h, int w, double fill) {
  return {PlaneStack(planes, h, w, fill), FieldStage::kExpanded, std::vector<bool>(planes, true)};
}

TEST(Assemble, ProductAtThreshold) {
  ScoreStack refined(2, 1, 2, 0.0);
  FieldStack fields = expanded(2, 1, 2, 0.0);
  refined.at(0, 0, 0) = 0.8;
  fields.planes.at(0, 0, 0) = 0.95;
  refined.at(0, 0, 1) = 0.9;
  fields.planes.at(0, 0, 1) = 0.8;
  const LabelMask mask = assemble(refined, fields);
  EXPECT_EQ(mask(0, 0), 1);
  EXPECT_EQ(mask(0, 1), 0);
}

TEST(Assemble, TieGoesToLowerClass) {
  ScoreStack refined(3, 1, 1, 0.8);
  const LabelMask mask = assemble(refined, expanded(3, 1, 1, 1.0));
  EXPECT_EQ(mask(0, 0), 1);
}

TEST(Assemble, BackgroundCompetesAndAbsentClassesNever) {
  ScoreStack refined(3, 1, 2, 0.0);
  FieldStack fields = expanded(3, 1, 2, 1.0);
  fields.present = {false, true, true};
  refined.at(0, 0, 0) = 1.0;
  refined.at(2, 0, 0) = 0.8;
  refined.at(0, 0, 1) = 1.0;
  const LabelMask mask = assemble(refined, fields);
  EXPECT_EQ(mask(0, 0), 3);
  EXPECT_EQ(mask(0, 1), 0);
}

TEST(Assemble, Errors) {
  EXPECT_THROW(assemble(ScoreStack(2, 2, 2), expanded(2, 2, 3, 1.0)), Error);
  FieldStack conf = expanded(2, 1, 1, 1.0);
  conf.stage = FieldStage::kConfidence;
  EXPECT_THROW(assemble(ScoreStack(2, 1, 1), conf), Error);
  EXPECT_THROW(assemble(ScoreStack(2, 1, 1), expanded(2, 1, 1, 1.0), 1.0), Error);
}

TEST(Assemble, RaisingThresholdNeverLabelsMore) {
  Rng rng(3);
  ScoreStack refined(4, 10, 10);
  for (double& v : refined.values()) v = rng.uniform();
  FieldStack fields = expanded(4, 10, 10, 0.0);
  for (double& v : fields.planes.values()) v = rng.uniform();
  LabelMask prev = assemble(refined, fields, 0.05);
  for (double t : {0.1, 0.2, 0.4, 0.6, 0.75, 0.9}) {
    const LabelMask next = assemble(refined, fields, t);
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (next[i] != 0) EXPECT_EQ(next[i], prev[i]);
    }
    prev = next;
  }
}

TEST(Superimpose, BlotsWin) {
  LabelMask intermediate(1, 3, 0);
  LabelMask blots(1, 3, 0);
  intermediate[1] = 1;
  intermediate[2] = 1;
  blots[0] = 2;
  blots[1] = 2;
  const PseudoMask out = superimpose(intermediate, blots);
  EXPECT_EQ(out.labels[0], 2);
  EXPECT_EQ(out.labels[1], 2);
  EXPECT_EQ(out.labels[2], 1);
  EXPECT_EQ(out.provenance[0], static_cast<std::uint8_t>(LabelSource::kBlot));
  EXPECT_EQ(out.provenance[1], static_cast<std::uint8_t>(LabelSource::kBlot));
  EXPECT_EQ(out.provenance[2], static_cast<std::uint8_t>(LabelSource::kThresholded));
}

TEST(Superimpose, EmptyBlotsAreIdentity) {
  LabelMask intermediate(2, 2, 0);
  intermediate[3] = 3;
  const PseudoMask out = superimpose(intermediate, LabelMask(2, 2, 0));
  EXPECT_EQ(out.labels, intermediate);
  EXPECT_EQ(out.provenance[0], static_cast<std::uint8_t>(LabelSource::kIgnore));
  EXPECT_THROW(superimpose(intermediate, LabelMask(2, 3, 0)), Error);
}

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    scene_ = synthetic::gen_scene(synthetic::random_scene_spec(11));
    Rng rng(4);
    scores_ = synthetic::oracle_scores(scene_.ground_truth, scene_.points.num_classes(), 0.2, rng);
  }
  synthetic::Scene scene_;
  ScoreStack scores_;
};

TEST_F(Pipeline, InvariantsHold) {
  const PipelineResult r = run_pipeline(scene_.image, scene_.points, scores_, make_expansion_state());
  const LabelMask& labels = r.mask.labels;
  for (const Point& p : scene_.points.entries()) EXPECT_EQ(labels(p.y, p.x), p.class_id);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    EXPECT_LE(label, scene_.points.num_classes() + 1);
    if (label != 0) EXPECT_TRUE(scene_.points.has_class(label));
    switch (static_cast<LabelSource>(r.mask.provenance[i])) {
      case LabelSource::kBlot:
        EXPECT_EQ(label, r.blots[i]);
        break;
      case LabelSource::kThresholded: {
        const double product = r.features.plane(label - 1)[i] * r.fields.planes.plane(label - 1)[i];
        EXPECT_GE(product, kDefaultMaskThreshold);
        break;
      }
      case LabelSource::kIgnore:
        EXPECT_EQ(label, 0);
        break;
    }
  }
}

TEST_F(Pipeline, IsDeterministic) {
  const PipelineResult a = run_pipeline(scene_.image, scene_.points, scores_, make_expansion_state());
  const PipelineResult b = run_pipeline(scene_.image, scene_.points, scores_, make_expansion_state());
  EXPECT_EQ(a.mask.labels, b.mask.labels);
  EXPECT_EQ(a.mask.provenance, b.mask.provenance);
}

TEST_F(Pipeline, UniformLowScoresWithFullFieldsGiveBlotsOnly) {
  const ScoreStack low(scores_.num_planes(), scores_.height(), scores_.width(), 0.3);
  ExpansionState full = make_expansion_state();
  full.object_score = 1.0;
  full.background_score = 1.0;
  const PipelineResult r = run_pipeline(scene_.image, scene_.points, low, full);
  EXPECT_EQ(r.mask.labels, r.blots);
}

TEST_F(Pipeline, DisabledStagesFallBack) {
  PipelineConfig config;
  config.use_blots = false;
  config.use_fields = false;
  config.use_refiner = false;
  const PipelineResult r = run_pipeline(scene_.image, scene_.points, scores_, make_expansion_state(), config);
  EXPECT_EQ(r.mask.labels, points_mask(scene_.points, scene_.image.height(), scene_.image.width()));
  EXPECT_EQ(r.features, scores_);

  config.use_refiner = true;
  const PipelineResult refined = run_pipeline(scene_.image, scene_.points, scores_, make_expansion_state(), config);
  std::vector<bool> present(scores_.num_planes());
  for (int p = 0; p < scores_.num_planes(); ++p) present[p] = scene_.points.has_class(p + 1);
  EXPECT_EQ(refined.intermediate, threshold_scores(refined.features, present));
}

TEST_F(Pipeline, DimensionChecks) {
  EXPECT_THROW(run_pipeline(scene_.image, scene_.points, ScoreStack(2, 3, 3), make_expansion_state()), Error);
  const ScoreStack wrong_planes(scores_.num_planes() + 1, scores_.height(), scores_.width());
  EXPECT_THROW(run_pipeline(scene_.image, scene_.points, wrong_planes, make_expansion_state()), Error);
}

}  // namespace
}  // namespace pmp
