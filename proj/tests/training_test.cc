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

#include "trajmotion/training.h"

#include <filesystem>

#include <gtest/gtest.h>

#include "trajmotion/errors.h"
#include "trajmotion/guidance.h"

namespace trajmotion {
namespace {

const Skeleton kToy = Skeleton::toy();
const int kJoints = kToy.joint_count();
const int kWidth = ChannelLayout::simplified(kJoints).width();

const Dataset& small_dataset() {
  static const Dataset ds = build_dataset(40, 3, 16);
  return ds;
}

TrainConfig tiny_config(int iterations) {
  TrainConfig c;
  c.iterations = iterations;
  c.lr_initial = 1e-3;
  c.lr_drop_at = iterations > 1 ? iterations / 2 : 1;
  c.lr_final = 1e-4;
  c.batch_size = 4;
  c.diffusion_steps = 50;
  c.seed = 5;
  return c;
}

DenoiserConfig tiny_model(const TrainConfig& c) {
  DenoiserConfig m = default_model_config(c, small_dataset());
  m.width = 16;
  m.heads = 2;
  m.layers = 1;
  return m;
}

TEST(LossElem, Examples) {
  MotionTensor a = MotionTensor::Zero(10, 10);
  EXPECT_EQ(loss_elem(a, a), 0.0);
  MotionTensor b = a;
  b(3, 7) = 2.0;
  EXPECT_DOUBLE_EQ(loss_elem(a, b), 0.04);
  EXPECT_THROW(loss_elem(a, MotionTensor::Zero(10, 9)), TensorError);
}

TEST(LossElem, MatchesLoopOracle) {
  Rng rng(1);
  const MotionTensor a = standard_normal(7, 13, rng);
  const MotionTensor b = standard_normal(7, 13, rng);
  double sum = 0.0;
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 13; ++c) sum += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
  }
  EXPECT_NEAR(loss_elem(a, b), sum / (7 * 13), 1e-12);
}

MotionTensor still_pose(int frames) {
  MotionTensor m = MotionTensor::Zero(frames, kWidth);
  m.col(3).setConstant(0.9);
  return m;
}

TEST(LossGlobal, Examples) {
  const MotionTensor m = still_pose(5);
  const GlobalMotion g = to_global(m, kJoints);
  TrajectorySpec spec = TrajectorySpec::from_global(g, {0}, {2});
  EXPECT_EQ(loss_global(m, spec, kToy), 0.0);
  spec.targets(2, 0) += 0.5;
  EXPECT_NEAR(loss_global(m, spec, kToy), 0.25, 1e-12);

  // One element off by 2 in a 2 x 50 tensor, plus the 0.25 offset above.
  const MotionTensor x0_hat = MotionTensor::Zero(2, 50);
  MotionTensor x0 = x0_hat;
  x0(1, 30) = 2.0;
  const double elem = loss_elem(x0, x0_hat);
  EXPECT_DOUBLE_EQ(elem, 0.04);
  const GlobalMotion g2 = to_global(MotionTensor(x0_hat.leftCols(kWidth)), kJoints);
  TrajectorySpec off = TrajectorySpec::from_global(g2, {0}, {1});
  off.targets(1, 2) -= 0.5;
  EXPECT_NEAR(total_loss(x0, x0_hat, off, kToy), 0.29, 1e-12);
}

TEST(LossGlobal, EmptyMaskIsZero) {
  const MotionTensor m = still_pose(4);
  EXPECT_EQ(loss_global(m, TrajectorySpec::empty(4, kJoints), kToy), 0.0);
}

TEST(LossGlobal, EqualsControlObjective) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    MotionTensor m = 0.3 * standard_normal(12, kWidth, rng);
    const GlobalMotion ref = to_global(0.3 * standard_normal(12, kWidth, rng), kJoints);
    const TrajectorySpec spec = TrajectorySpec::from_global(ref, {0, 2, 6}, {0, 3, 4, 11});
    EXPECT_NEAR(loss_global(m, spec, kToy), control_objective(m, spec, kToy), 1e-12);
  }
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  const MotionTensor x0 = 0.3 * standard_normal(6, kWidth, rng);
  MotionTensor x0_hat = 0.3 * standard_normal(6, kWidth, rng);
  const TrajectorySpec spec = TrajectorySpec::from_global(
      to_global(x0, kJoints), {0, 3, 7}, {0, 2, 5});
  MotionTensor grad, g_elem, g_global;
  total_loss(x0, x0_hat, spec, kToy, &grad);
  loss_elem(x0, x0_hat, &g_elem);
  loss_global(x0_hat, spec, kToy, &g_global);
  EXPECT_LT((grad - g_elem - g_global).cwiseAbs().maxCoeff(), 1e-12);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0_hat.size(); ++i) {
    const double keep = x0_hat.data()[i];
    x0_hat.data()[i] = keep + h;
    const double up = total_loss(x0, x0_hat, spec, kToy);
    x0_hat.data()[i] = keep - h;
    const double down = total_loss(x0, x0_hat, spec, kToy);
    x0_hat.data()[i] = keep;
    ASSERT_NEAR(grad.data()[i], (up - down) / (2 * h), 1e-6) << "index " << i;
  }
}

TEST(Loss, MaskedEntriesContributeToStageTwoLoss) {
  // The element loss covers the whole tensor, observed entries included.
  Rng rng(4);
  const ChannelLayout layout = ChannelLayout::redundant(kJoints);
  const MotionTensor clean = standard_normal(10, layout.width(), rng);
  const RandomMask m = sample_training_mask(clean, kToy, layout, rng);
  MotionTensor pred = clean;
  double expected = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (m.spec.mask.data()[i] != 0.0) {
      pred.data()[i] += 0.1;
      expected += 0.01;
    }
  }
  ASSERT_GT(expected, 0.0);
  EXPECT_NEAR(loss_elem(clean, pred), expected / static_cast<double>(pred.size()), 1e-12);
}

TEST(TrainConfig, ValidationAndJson) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  TrainConfig bad = c;
  bad.lr_drop_at = bad.iterations;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.stage = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.lr_initial = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  nlohmann::json j = c.to_json();
  j["learning_rate_typo"] = 1.0;
  EXPECT_THROW(TrainConfig::from_json(j), ConfigError);
}

TEST(TrainStage, ZeroIterationsReturnsInitialization) {
  const TrainConfig c = tiny_config(0);
  const DenoiserConfig mc = tiny_model(c);
  const Checkpoint ckpt = train_stage(c, small_dataset(), Denoiser(mc));
  const Denoiser fresh(mc);
  const auto a = ckpt.model.parameters();
  const auto b = fresh.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
  EXPECT_TRUE(ckpt.history.empty());
}

TEST(TrainStage, LearningRateDropsAtConfiguredIteration) {
  TrainConfig c = tiny_config(6);
  c.lr_initial = 2e-4;
  c.lr_final = 1e-5;
  c.lr_drop_at = 4;
  const Checkpoint ckpt = train_stage(c, small_dataset(), Denoiser(tiny_model(c)));
  ASSERT_EQ(ckpt.history.size(), 6u);
  EXPECT_EQ(ckpt.history[3].learning_rate, 2e-4);
  EXPECT_EQ(ckpt.history[4].learning_rate, 1e-5);
}

TEST(TrainStage, ReproducibleLossAtIteration100) {
  const TrainConfig c = tiny_config(101);
  const Checkpoint a = train_stage(c, small_dataset(), Denoiser(tiny_model(c)));
  const Checkpoint b = train_stage(c, small_dataset(), Denoiser(tiny_model(c)));
  EXPECT_EQ(a.history[100].loss, b.history[100].loss);
  TrainConfig other = c;
  other.seed = 6;
  const Checkpoint d = train_stage(other, small_dataset(), Denoiser(tiny_model(other)));
  EXPECT_NE(a.history[100].loss, d.history[100].loss);
}

TEST(TrainStage, StageTwoTrainsOnRedundantTensors) {
  TrainConfig c = tiny_config(4);
  c.stage = 2;
  const Checkpoint ckpt = train_stage(c, small_dataset(), Denoiser(tiny_model(c)));
  EXPECT_EQ(ckpt.representation, RepresentationKind::kRedundant);
  EXPECT_EQ(ckpt.model_config.channel_count, ChannelLayout::redundant(kJoints).width());
  // A stage-1 model cannot be trained as stage 2.
  TrainConfig s1 = tiny_config(4);
  EXPECT_THROW(train_stage(c, small_dataset(), Denoiser(tiny_model(s1))), ConfigError);
}

TEST(TrainStage, CheckpointRoundTrip) {
  const TrainConfig c = tiny_config(3);
  const Checkpoint ckpt = train_stage(c, small_dataset(), Denoiser(tiny_model(c)));
  const auto dir = std::filesystem::temp_directory_path() / "trajmotion_ckpt_test";
  std::filesystem::remove_all(dir);
  save_checkpoint(ckpt, dir.string());
  const Checkpoint back = load_checkpoint(dir.string());
  EXPECT_EQ(back.model_config.to_json(), ckpt.model_config.to_json());
  EXPECT_EQ(back.train_config.to_json(), ckpt.train_config.to_json());
  EXPECT_EQ(back.normalizer.mean, ckpt.normalizer.mean);
  EXPECT_EQ(back.history.size(), ckpt.history.size());
  const auto a = ckpt.model.parameters();
  const auto b = back.model.parameters();
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
  std::filesystem::remove_all(dir);
}

TEST(TrainStage, SmoothedLossHalves) {
  TrainConfig c = tiny_config(2000);
  c.lr_drop_at = 1500;
  const Checkpoint ckpt = train_stage(c, small_dataset(), Denoiser(tiny_model(c)));
  const std::vector<double> smooth = smoothed_losses(ckpt.history);
  EXPECT_LT(smooth.back(), 0.5 * smooth.front());
}

TEST(SmoothedLosses, IsExponentialAverage) {
  std::vector<LossRecord> h(3);
  h[0].loss = 4.0;
  h[1].loss = 2.0;
  h[2].loss = 2.0;
  const auto s = smoothed_losses(h, 0.5);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[0], 4.0);
  EXPECT_DOUBLE_EQ(s[1], 3.0);
  EXPECT_DOUBLE_EQ(s[2], 2.5);
}

}  // namespace
}  // namespace trajmotion
