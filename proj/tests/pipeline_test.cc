// Copyright 2026 The trajmotion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trajmotion/pipeline.h"

#include <sstream>

#include <gtest/gtest.h>

#include "trajmotion/errors.h"

namespace trajmotion {
namespace {

struct Models {
  Dataset ds = build_dataset(30, 5, 16);
  Checkpoint s1, s2, s1_redundant;

  static Checkpoint train(const Dataset& ds, int stage, RepresentationKind kind) {
    TrainConfig c;
    c.iterations = 8;
    c.lr_drop_at = 6;
    c.lr_initial = 1e-3;
    c.batch_size = 4;
    c.diffusion_steps = 20;
    c.stage = stage;
    c.representation = kind;
    DenoiserConfig m = default_model_config(c, ds);
    m.width = 16;
    m.heads = 2;
    m.layers = 1;
    return train_stage(c, ds, Denoiser(m));
  }
  Models()
      : s1(train(ds, 1, RepresentationKind::kSimplified)),
        s2(train(ds, 2, RepresentationKind::kRedundant)),
        s1_redundant(train(ds, 1, RepresentationKind::kRedundant)) {}
};

const Models& models() {
  static const Models m;
  return m;
}

GenerationRequest request_for(const DatasetSample& sample, const std::vector<int>& joints,
                              double density = 1.0) {
  const GlobalMotion truth = to_global(sample.motion, Skeleton::toy());
  GenerationRequest r;
  r.prompt = sample.prompt;
  r.trajectory = TrajectorySpec::from_global(truth, joints, control_frames(truth.frames(), density));
  r.seed = 99;
  return r;
}

TEST(Generate, DeterministicForFixedSeed) {
  const Models& m = models();
  const GenerationRequest r = request_for(m.ds.test[0], {0, 4});
  const GenerationResult a = generate(r, m.s1, &m.s2);
  const GenerationResult b = generate(r, m.s1, &m.s2);
  EXPECT_EQ(a.motion.data(), b.motion.data());
  EXPECT_EQ(a.trace.guided_error, b.trace.guided_error);
  GenerationRequest other = r;
  other.seed = 100;
  EXPECT_NE(generate(other, m.s1, &m.s2).motion.data(), a.motion.data());
}

TEST(Generate, ObservedChannelsMatchStageOneExactly) {
  const Models& m = models();
  const int wrist = Skeleton::toy().index_of("right_wrist");
  for (Ablation ab : {Ablation::kNone, Ablation::kPassTorsoJoints, Ablation::kPassAllJoints}) {
    GenerationRequest r = request_for(m.ds.test[1], {0, wrist});
    r.ablation = ab;
    const GenerationResult g = generate(r, m.s1, &m.s2);
    ASSERT_GT(g.observations.popcount(), 0);
    const MotionTensor& out = g.motion.data();
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (g.observations.mask.data()[i] == 0.0) continue;
      ASSERT_EQ(out.data()[i], g.observations.observed.data()[i]);
    }
    // The observations are stage-1 values.
    for (int f = 0; f < out.rows(); ++f) {
      for (int c = 0; c < 4; ++c) ASSERT_EQ(out(f, c), g.stage1(f, c));
    }
    ASSERT_TRUE(g.metrics.has_value());
  }
}

TEST(Generate, PassedJointSets) {
  const Skeleton skel = Skeleton::toy();
  const int wrist = skel.index_of("left_wrist");
  TrajectorySpec spec = TrajectorySpec::empty(4, 8);
  spec.controlled_joints = {wrist};
  EXPECT_EQ(passed_joints(spec, Ablation::kNone, skel), (std::vector<int>{0, wrist}));
  const auto torso = passed_joints(spec, Ablation::kPassTorsoJoints, skel);
  EXPECT_EQ(torso.size(), 3u);
  EXPECT_NE(std::find(torso.begin(), torso.end(), skel.index_of("head")), torso.end());
  EXPECT_EQ(passed_joints(spec, Ablation::kPassAllJoints, skel).size(), 8u);
}

TEST(Generate, SingleStageUsesRedundantModelOnly) {
  const Models& m = models();
  GenerationRequest r = request_for(m.ds.test[2], {0});
  r.ablation = Ablation::kSingleStage;
  const GenerationResult g = generate(r, m.s1_redundant, nullptr);
  EXPECT_EQ(g.motion.layout(), ChannelLayout::redundant(8));
  EXPECT_EQ(g.observations.popcount(), 0);
  EXPECT_THROW(generate(r, m.s1, nullptr), ConfigError);
  r.ablation = Ablation::kRedundantStage1;
  EXPECT_NO_THROW(generate(r, m.s1_redundant, &m.s2));
}

TEST(Generate, CheckpointMismatchIsRejected) {
  const Models& m = models();
  const GenerationRequest r = request_for(m.ds.test[0], {0});
  EXPECT_THROW(generate(r, m.s2, &m.s2), ConfigError);
  EXPECT_THROW(generate(r, m.s1, &m.s1), ConfigError);
  EXPECT_THROW(generate(r, m.s1, nullptr), ConfigError);
  GenerationRequest bad = r;
  bad.sampler = Sampler::kDdim;
  bad.ddim_steps_s1 = 50;
  EXPECT_THROW(generate(bad, m.s1, &m.s2), ConfigError);
}

TEST(Generate, DdimSamplerRuns) {
  const Models& m = models();
  GenerationRequest r = request_for(m.ds.test[3], {0});
  r.sampler = Sampler::kDdim;
  r.ddim_steps_s1 = 4;
  r.ddim_steps_s2 = 6;
  const GenerationResult g = generate(r, m.s1, &m.s2);
  EXPECT_TRUE(g.motion.data().allFinite());
  EXPECT_EQ(g.trace.size(), 4u);
}

TEST(Completion, NoObservationsIsTextOnly) {
  const Models& m = models();
  const TextEncoder enc = dataset_text_encoder(m.s2.model_config.text_embed_dim);
  const MotionTensor a = sample_motion_completion(m.s2, enc.encode("a person sits down").embedding,
                                                  nullptr, 16, {}, 1);
  EXPECT_EQ(a.cols(), ChannelLayout::redundant(8).width());
  EXPECT_EQ(a.rows(), 16);
  EXPECT_THROW(sample_motion_completion(m.s2, enc.encode("a person sits down").embedding, nullptr,
                                        1000, {}, 1),
               TensorError);
}

TEST(Evaluate, OracleHasZeroErrors) {
  const Models& m = models();
  EvaluationOptions o;
  o.mode = EvalMode::kOracle;
  ControlConfig all;
  const auto& cj = Skeleton::toy().controllable_joints;
  all.joints.assign(cj.begin(), cj.end());
  const MetricsReport r = evaluate(m.ds, m.ds.test, nullptr, nullptr, all, o);
  EXPECT_EQ(r.traj_err_pct, 0.0);
  EXPECT_EQ(r.loc_err_pct, 0.0);
  EXPECT_EQ(r.avg_err_cm, 0.0);
  EXPECT_NEAR(r.fid_proxy, 0.0, 1e-9);
  EXPECT_EQ(r.samples, static_cast<int>(m.ds.test.size()));
}

TEST(Evaluate, SingleKeyframeDensityScoresOnlyThatFrame) {
  const Models& m = models();
  EXPECT_EQ(control_frames(16, 1e-3), (std::vector<int>{8}));
  EXPECT_EQ(control_frames(16, 1.0).size(), 16u);
  EXPECT_EQ(control_frames(16, 0.25), (std::vector<int>{2, 6, 10, 14}));
  EvaluationOptions o;
  o.max_samples = 2;
  ControlConfig one;
  one.density = 1e-3;
  std::vector<GenerationResult> results;
  evaluate(m.ds, m.ds.test, &m.s1, &m.s2, one, o, &results);
  ASSERT_EQ(results.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    const GlobalMotion truth = to_global(m.ds.test[i].motion, Skeleton::toy());
    const double d = (results[i].world.position(8, 0) - truth.position(8, 0)).norm();
    EXPECT_NEAR(results[i].metrics->avg_err_cm, 100.0 * d, 1e-9);
  }
}

TEST(Evaluate, StandardControlConfigs) {
  const auto configs = standard_control_configs(Skeleton::toy());
  ASSERT_EQ(configs.size(), 8u);
  EXPECT_EQ(configs[6].joints.size(), 6u);
  EXPECT_LT(configs[7].density, 1.0);
}

TEST(Instrument, TraceLengthEqualsStepCount) {
  const Models& m = models();
  InstrumentConfig c;
  c.samples = 3;
  c.optimizer = GuidanceOptimizer::kLbfgs;
  const auto traces = instrument(m.s1, m.ds, c);
  ASSERT_EQ(traces.size(), 3u);
  const ErrorTraceSummary s = summarize_traces(traces);
  std::ostringstream csv;
  s.write_csv(csv);
  int lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  EXPECT_EQ(lines, 1 + m.s1.schedule.steps);
  EXPECT_EQ(traces[0].size(), static_cast<size_t>(m.s1.schedule.steps));
}

TEST(Names, RoundTrip) {
  for (Ablation a : {Ablation::kNone, Ablation::kPassAllJoints, Ablation::kPassTorsoJoints,
                     Ablation::kSingleStage, Ablation::kRedundantStage1}) {
    EXPECT_EQ(ablation_from_string(to_string(a)), a);
  }
  EXPECT_EQ(sampler_from_string("ddim"), Sampler::kDdim);
  EXPECT_THROW(sampler_from_string("euler"), ConfigError);
}

}  // namespace
}  // namespace trajmotion
