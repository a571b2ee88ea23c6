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

#include "trajmotion/inpainting.h"

#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "trajmotion/errors.h"

namespace trajmotion {
namespace {

const Skeleton kToy = Skeleton::toy();
const ChannelLayout kLayout = ChannelLayout::redundant(8);

std::vector<int> all_frames(int n) {
  std::vector<int> f(n);
  for (int i = 0; i < n; ++i) f[i] = i;
  return f;
}

TEST(ObservationMask, PelvisOnlyIsRootChannels) {
  Rng rng(41);
  const MotionTensor src = standard_normal(10, kLayout.width(), rng);
  const MaskSpec m = build_observation_mask(src, kToy, kLayout, {0}, all_frames(10));
  EXPECT_EQ(m.popcount(), 4 * 10);
  EXPECT_EQ(m.mask.leftCols(4).minCoeff(), 1.0);
  EXPECT_EQ(m.observed.leftCols(4), src.leftCols(4));
}

TEST(ObservationMask, LeftWristAddsThreeChannelsPerFrame) {
  Rng rng(42);
  const MotionTensor src = standard_normal(10, kLayout.width(), rng);
  const int wrist = kToy.index_of("left_wrist");
  const MaskSpec m = build_observation_mask(src, kToy, kLayout, {wrist}, all_frames(10));
  EXPECT_EQ(m.popcount(), 4 * 10 + 3 * 10);
  EXPECT_EQ(m.mask.col(kLayout.joint_position(wrist) + 2).minCoeff(), 1.0);
}

TEST(ObservationMask, PopcountMatchesCountingOracle) {
  Rng rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int frames = 5 + trial % 20;
    const MotionTensor src = standard_normal(frames, kLayout.width(), rng);
    std::vector<int> joints, sel;
    for (int j : kToy.controllable_joints) {
      if (u(rng) < 0.5) joints.push_back(j);
    }
    if (joints.empty()) joints.push_back(kToy.controllable_joints[trial % 6]);
    for (int f = 0; f < frames; ++f) {
      if (u(rng) < 0.4) sel.push_back(f);
    }
    const MaskSpec m = build_observation_mask(src, kToy, kLayout, joints, sel);
    const long non_root = std::count_if(joints.begin(), joints.end(), [](int j) { return j != 0; });
    EXPECT_EQ(m.popcount(), 4L * frames + 3L * non_root * static_cast<long>(sel.size()));
    // Only root and joint-position channels are ever observed.
    EXPECT_EQ(m.mask.rightCols(kLayout.width() - kLayout.position_prefix()).maxCoeff(), 0.0);
  }
}

TEST(ObservationMask, Errors) {
  const MotionTensor src = MotionTensor::Zero(4, kLayout.width());
  EXPECT_THROW(build_observation_mask(src, kToy, kLayout, {}, {0}), ConfigError);
  EXPECT_THROW(build_observation_mask(src, kToy, kLayout, {kToy.index_of("left_knee")}, {0}),
               ConfigError);
  EXPECT_NO_THROW(build_observation_mask(src, kToy, kLayout, {kToy.index_of("left_knee")}, {0},
                                         /*allow_any_joint=*/true));
}

TEST(Substitution, TerminalStepIsExact) {
  Rng rng(44);
  const NoiseSchedule sched = NoiseSchedule::linear(100);
  const MotionTensor src = standard_normal(8, kLayout.width(), rng);
  const MaskSpec m = build_observation_mask(src, kToy, kLayout, {0, 2}, all_frames(8));
  const MotionTensor x = standard_normal(8, kLayout.width(), rng);
  const MotionTensor eps = standard_normal(8, kLayout.width(), rng);
  const MotionTensor out = substitute_observations(x, 0, m, sched, eps);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (m.mask.data()[i] != 0.0) {
      ASSERT_EQ(out.data()[i], src.data()[i]);
    } else {
      ASSERT_EQ(out.data()[i], x.data()[i]);
    }
  }
}

TEST(Substitution, EmptyMaskIsIdentity) {
  Rng rng(45);
  const NoiseSchedule sched = NoiseSchedule::linear(100);
  MaskSpec m;
  m.mask = Eigen::MatrixXd::Zero(6, kLayout.width());
  m.observed = MotionTensor::Zero(6, kLayout.width());
  const MotionTensor x = standard_normal(6, kLayout.width(), rng);
  EXPECT_EQ(substitute_observations(x, 40, m, sched, x), x);
}

TEST(Substitution, NoisedModeAtMidpoint) {
  Rng rng(46);
  const NoiseSchedule sched = NoiseSchedule::linear(100);
  const MotionTensor src = standard_normal(6, kLayout.width(), rng);
  const MaskSpec m = build_observation_mask(src, kToy, kLayout, {0, 4}, all_frames(6));
  const MotionTensor x = standard_normal(6, kLayout.width(), rng);
  const MotionTensor zero = MotionTensor::Zero(6, kLayout.width());
  const MotionTensor noised = substitute_observations(x, 50, m, sched, zero, ObservationNoise::kNoised);
  const MotionTensor clean = substitute_observations(x, 50, m, sched, zero, ObservationNoise::kClean);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (m.mask.data()[i] == 0.0) continue;
    ASSERT_EQ(noised.data()[i], sched.coef_x0(50) * src.data()[i]);
    ASSERT_EQ(clean.data()[i], src.data()[i]);
  }
}

struct SimFixture {
  std::vector<MotionTensor> clean, noise;
  std::vector<int> steps;
  NoiseSchedule sched = NoiseSchedule::linear(100);
  explicit SimFixture(int batch) {
    Rng rng(47);
    for (int i = 0; i < batch; ++i) {
      clean.push_back(standard_normal(12, kLayout.width(), rng));
      noise.push_back(standard_normal(12, kLayout.width(), rng));
      steps.push_back(1 + 7 * i);
    }
  }
};

TEST(Sim, CoinSelectsBranch) {
  SimFixture fx(4);
  Rng mask_rng(48);
  const SimBatch in = sim_prepare_batch(fx.clean, fx.steps, fx.noise, 0.0, kToy, kLayout, fx.sched,
                                        SimConfig{}, mask_rng);
  EXPECT_EQ(in.mode, SimMode::kInpainting);
  for (const auto& s : in.samples) {
    ASSERT_TRUE(s.mask.has_value());
    EXPECT_GT(s.mask->spec.popcount(), 0);
    EXPECT_GE(s.mask->joints.size(), 1u);
    EXPECT_LE(s.mask->joints.size(), 6u);
  }
  const SimBatch out = sim_prepare_batch(fx.clean, fx.steps, fx.noise, 0.99, kToy, kLayout,
                                         fx.sched, SimConfig{}, mask_rng);
  EXPECT_EQ(out.mode, SimMode::kNonInpainting);
  for (size_t i = 0; i < out.samples.size(); ++i) {
    EXPECT_FALSE(out.samples[i].mask.has_value());
    EXPECT_EQ(out.samples[i].model_input, q_sample(fx.clean[i], fx.steps[i], fx.noise[i], fx.sched));
  }
  EXPECT_THROW(sim_prepare_batch(fx.clean, fx.steps, fx.noise, 1.0, kToy, kLayout, fx.sched,
                                 SimConfig{}, mask_rng),
               ConfigError);
}

TEST(Sim, InpaintingFractionConcentrates) {
  SimFixture fx(1);
  Rng coin_rng(49), mask_rng(50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int inpainting = 0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const SimBatch b = sim_prepare_batch(fx.clean, fx.steps, fx.noise, u(coin_rng), kToy, kLayout,
                                         fx.sched, SimConfig{}, mask_rng);
    if (b.mode == SimMode::kInpainting) ++inpainting;
  }
  const double fraction = static_cast<double>(inpainting) / draws;
  EXPECT_GE(fraction, 0.48);
  EXPECT_LE(fraction, 0.52);
}

TEST(Sim, TrainingMasksCoverSpansOfControllableJoints) {
  Rng rng(51);
  const MotionTensor clean = standard_normal(20, kLayout.width(), rng);
  std::set<size_t> sizes;
  for (int k = 0; k < 500; ++k) {
    const RandomMask m = sample_training_mask(clean, kToy, kLayout, rng);
    sizes.insert(m.joints.size());
    ASSERT_GE(m.frame_count, 1);
    ASSERT_LE(m.first_frame + m.frame_count, 20);
    for (int f = 0; f < 20; ++f) {
      const bool inside = f >= m.first_frame && f < m.first_frame + m.frame_count;
      ASSERT_EQ(m.spec.mask(f, 0), inside ? 1.0 : 0.0);
    }
    for (int j : m.joints) {
      ASSERT_NE(std::find(kToy.controllable_joints.begin(), kToy.controllable_joints.end(), j),
                kToy.controllable_joints.end());
    }
  }
  EXPECT_EQ(sizes.size(), 6u);
  EXPECT_THROW(sample_training_mask(MotionTensor(0, kLayout.width()), kToy, kLayout, rng), DataError);
}

TEST(Sim, CleanObservationsAreHeldInInput) {
  SimFixture fx(3);
  Rng mask_rng(52);
  SimConfig config;
  config.observation_noise = ObservationNoise::kClean;
  const SimBatch b = sim_prepare_batch(fx.clean, fx.steps, fx.noise, 0.1, kToy, kLayout, fx.sched,
                                       config, mask_rng);
  for (size_t i = 0; i < b.samples.size(); ++i) {
    const auto& s = b.samples[i];
    for (Eigen::Index k = 0; k < s.model_input.size(); ++k) {
      if (s.mask->spec.mask.data()[k] != 0.0) ASSERT_EQ(s.model_input.data()[k], fx.clean[i].data()[k]);
    }
  }
}

}  // namespace
}  // namespace trajmotion
