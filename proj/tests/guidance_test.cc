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

#include "trajmotion/guidance.h"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "trajmotion/diffusion.h"
#include "trajmotion/errors.h"
#include "trajmotion/lbfgs.h"
#include "trajmotion/normalizer.h"

namespace trajmotion {
namespace {

constexpr int kJoints = 8;
const int kWidth = ChannelLayout::simplified(kJoints).width();

MotionTensor random_local(int frames, Rng& rng) {
  MotionTensor m = 0.3 * standard_normal(frames, kWidth, rng);
  m.col(0) *= 0.2;
  return m;
}

TrajectorySpec random_spec(const MotionTensor& m, Rng& rng, double offset_scale) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrajectorySpec spec = TrajectorySpec::empty(m.rows(), kJoints);
  const GlobalMotion g = to_global(m, kJoints);
  for (int f = 0; f < m.rows(); ++f) {
    for (int j : {0, 2, 4}) {
      if (u(rng) < 0.4) {
        spec.mask(f, j) = 1.0;
        spec.targets.row(f).segment<3>(3 * j) =
            g.positions.row(f).segment<3>(3 * j) + offset_scale * standard_normal(1, 3, rng);
      }
    }
  }
  spec.mask(0, 0) = 1.0;
  spec.targets.row(0).head<3>() = g.positions.row(0).head<3>();
  spec.controlled_joints = {0, 2, 4};
  return spec;
}

TEST(ControlObjective, ZeroAtTargets) {
  Rng rng(31);
  const MotionTensor m = random_local(6, rng);
  const TrajectorySpec spec =
      TrajectorySpec::from_global(to_global(m, kJoints), {0, 3}, {0, 2, 5});
  EXPECT_NEAR(control_objective(m, spec, Skeleton::toy()), 0.0, 1e-24);
}

TEST(ControlObjective, SingleOffset) {
  const MotionTensor m = MotionTensor::Zero(3, kWidth);
  TrajectorySpec spec = TrajectorySpec::empty(3, kJoints);
  spec.mask(1, 0) = 1.0;
  spec.targets.row(1).head<3>() << 0.3, 0.0, 0.4;
  EXPECT_NEAR(control_objective(m, spec, Skeleton::toy()), 0.25, 1e-15);
  EXPECT_EQ(control_objective(m, TrajectorySpec::empty(3, kJoints), Skeleton::toy()), 0.0);
}

TEST(ControlObjective, MatchesLoopOracle) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const MotionTensor m = random_local(9, rng);
    const TrajectorySpec spec = random_spec(m, rng, 0.5);
    const GlobalMotion g = to_global(m, kJoints);
    double sum = 0.0;
    int count = 0;
    for (int f = 0; f < 9; ++f) {
      for (int j = 0; j < kJoints; ++j) {
        if (spec.mask(f, j) == 0.0) continue;
        for (int a = 0; a < 3; ++a) {
          const double d = g.positions(f, 3 * j + a) - spec.targets(f, 3 * j + a);
          sum += d * d;
        }
        ++count;
      }
    }
    EXPECT_NEAR(control_objective(m, spec, Skeleton::toy()), sum / count, 1e-10);
  }
}

TEST(ControlObjective, GradientMatchesFiniteDifferences) {
  Rng rng(33);
  const MotionTensor m = random_local(7, rng);
  const TrajectorySpec spec = random_spec(m, rng, 0.8);
  MotionTensor grad;
  control_objective(m, spec, kJoints, &grad);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    MotionTensor p = m, q = m;
    p.data()[i] += h;
    q.data()[i] -= h;
    const double fd = (control_objective(p, spec, kJoints, nullptr) -
                       control_objective(q, spec, kJoints, nullptr)) /
                      (2 * h);
    ASSERT_LE(std::abs(fd - grad.data()[i]), 1e-4 * std::max(1.0, std::abs(fd))) << i;
  }
}

TEST(GuidanceSchedule, PaperSplitAndClamp) {
  const GuidanceSchedule s1000 = make_guidance_schedule(1000);
  ASSERT_EQ(s1000.size(), 2u);
  EXPECT_EQ(s1000[0].first_step, 1000);
  EXPECT_EQ(s1000[0].last_step, 11);
  EXPECT_EQ(s1000[0].iterations, 10);
  EXPECT_DOUBLE_EQ(s1000[0].learning_rate, 0.5);
  EXPECT_EQ(s1000[1].first_step, 10);
  EXPECT_EQ(s1000[1].last_step, 1);
  EXPECT_EQ(s1000[1].iterations, 100);
  EXPECT_DOUBLE_EQ(s1000[1].learning_rate, 0.1);
  EXPECT_EQ(make_guidance_schedule(100)[1].first_step, 10);
  EXPECT_EQ(make_guidance_schedule(3000)[1].first_step, 30);
  EXPECT_THROW(make_guidance_schedule(19), ConfigError);
}

TEST(GuidanceSchedule, PhasesPartitionSteps) {
  for (int T = 20; T <= 2000; ++T) {
    const GuidanceSchedule s = make_guidance_schedule(T);
    for (int t = 1; t <= T; ++t) {
      int covering = 0;
      for (const auto& p : s) covering += p.contains(t) ? 1 : 0;
      ASSERT_EQ(covering, 1) << "T=" << T << " t=" << t;
    }
  }
}

TEST(GuidePosterior, StationaryAtSolution) {
  Rng rng(34);
  const MotionTensor m = random_local(6, rng);
  const TrajectorySpec spec = TrajectorySpec::from_global(to_global(m, kJoints), {0, 5}, {1, 4});
  const GuidanceResult r = guide_posterior(m, 5, spec, make_guidance_schedule(100)[1], Skeleton::toy());
  EXPECT_LE((r.mu - m).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(GuidePosterior, EmptyMaskReturnsInput) {
  Rng rng(35);
  const MotionTensor m = random_local(6, rng);
  const GuidanceResult r = guide_posterior(m, 5, TrajectorySpec::empty(6, kJoints),
                                           make_guidance_schedule(100)[0], Skeleton::toy());
  EXPECT_EQ(r.mu, m);
}

TEST(GuidePosterior, FinePhaseReachesSingleKeyframe) {
  Rng rng(36);
  for (int trial = 0; trial < 10; ++trial) {
    const MotionTensor m = random_local(16, rng);
    const GlobalMotion g = to_global(m, kJoints);
    TrajectorySpec spec = TrajectorySpec::empty(16, kJoints);
    const int frame = 3 + trial;
    const int joint = trial % 2 == 0 ? 0 : 3;
    Eigen::Vector3d offset = standard_normal(3, 1, rng);
    offset.normalize();
    spec.mask(frame, joint) = 1.0;
    spec.targets.row(frame).segment<3>(3 * joint) =
        g.positions.row(frame).segment<3>(3 * joint) + offset.transpose();
    const GuidancePhase fine = make_guidance_schedule(100)[1];
    const GuidanceResult r = guide_posterior(m, 1, spec, fine, Skeleton::toy());
    EXPECT_LE(r.iterations, 100);
    EXPECT_LT(mean_control_error(r.mu, spec, kJoints), 1e-3) << trial;
  }
}

TEST(GuidePosterior, AcceptedValuesNeverIncrease) {
  Rng rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const MotionTensor m = random_local(10, rng);
    const TrajectorySpec spec = random_spec(m, rng, 1.0);
    const GuidancePhase phase = make_guidance_schedule(100)[trial % 2];
    const GuidanceResult r = guide_posterior(m, 50, spec, phase, Skeleton::toy());
    ASSERT_FALSE(r.accepted_values.empty());
    EXPECT_LE(r.accepted_values.front(), r.objective_before);
    for (size_t k = 1; k < r.accepted_values.size(); ++k) {
      ASSERT_LE(r.accepted_values[k], r.accepted_values[k - 1]) << trial << " step " << k;
    }
    EXPECT_LE(mean_control_error(r.mu, spec, kJoints), mean_control_error(m, spec, kJoints));
  }
}

TEST(GuidePosterior, NormalizedSpaceMatchesPhysicalObjective) {
  Rng rng(38);
  const MotionTensor m = random_local(8, rng);
  const TrajectorySpec spec = random_spec(m, rng, 0.5);
  Normalizer norm = Normalizer::identity(kWidth);
  norm.mean = 0.1 * standard_normal(1, kWidth, rng);
  norm.std = (0.5 * standard_normal(1, kWidth, rng)).array().abs() + 0.5;
  const MotionTensor z = norm.normalize(m);
  const GuidanceResult r =
      guide_posterior(z, 50, spec, make_guidance_schedule(100)[0], Skeleton::toy(), &norm);
  EXPECT_NEAR(r.objective_before, control_objective(m, spec, Skeleton::toy()), 1e-12);
  EXPECT_LT(control_objective(norm.denormalize(r.mu), spec, Skeleton::toy()), r.objective_before);
}

TEST(GuidePosterior, NonFiniteAbortsAndKeepsInput) {
  MotionTensor m = MotionTensor::Zero(4, kWidth);
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  TrajectorySpec spec = TrajectorySpec::empty(4, kJoints);
  spec.mask(2, 0) = 1.0;
  const GuidanceResult r =
      guide_posterior(m, 5, spec, make_guidance_schedule(100)[0], Skeleton::toy());
  EXPECT_TRUE(r.aborted);
  EXPECT_TRUE(r.mu.hasNaN());
}

TEST(Lbfgs, MinimizesRosenbrock) {
  LbfgsOptions o;
  o.max_iterations = 200;
  const MinimizeResult r = minimize_lbfgs(
      [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g.resize(2);
        g[0] = -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] * x[0]);
        g[1] = 200 * (x[1] - x[0] * x[0]);
        return (1 - x[0]) * (1 - x[0]) + 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]);
      },
      Eigen::Vector2d(-1.2, 1.0), o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
  for (size_t k = 1; k < r.accepted_values.size(); ++k) {
    EXPECT_LE(r.accepted_values[k], r.accepted_values[k - 1]);
  }
}

TEST(ErrorTrace, SummaryShapesAndCsv) {
  std::vector<ErrorTrace> traces(3);
  for (int s = 0; s < 3; ++s) {
    for (int t = 5; t >= 1; --t) traces[s].record(t, 1.0 + s, 0.5 * s);
  }
  const ErrorTraceSummary summary = summarize_traces(traces);
  ASSERT_EQ(summary.steps.size(), 5u);
  EXPECT_NEAR(summary.predicted_mean[0], 2.0, 1e-12);
  EXPECT_NEAR(summary.predicted_std[0], std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(summary.mean_predicted_std(), std::sqrt(2.0 / 3.0), 1e-12);
  std::ostringstream csv;
  summary.write_csv(csv);
  std::string line;
  std::istringstream in(csv.str());
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "step,predicted_mean,predicted_std,guided_mean,guided_std");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

}  // namespace
}  // namespace trajmotion
