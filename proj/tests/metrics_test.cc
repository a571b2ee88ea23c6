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

#include "trajmotion/metrics.h"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "trajmotion/diffusion.h"
#include "trajmotion/errors.h"

namespace trajmotion {
namespace {

const Skeleton kToy = Skeleton::toy();
constexpr int kJoints = 8;

GlobalMotion random_world(int frames, Rng& rng) {
  GlobalMotion g;
  g.positions = standard_normal(frames, 3 * kJoints, rng);
  g.root_yaw = Eigen::VectorXd::Zero(frames);
  return g;
}

TrajectorySpec random_spec(const GlobalMotion& ref, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrajectorySpec s = TrajectorySpec::empty(ref.frames(), kJoints);
  for (int f = 0; f < ref.frames(); ++f) {
    for (int j = 0; j < kJoints; ++j) {
      if (u(rng) < 0.3) {
        s.mask(f, j) = 1.0;
        s.targets.row(f).segment<3>(3 * j) =
            ref.positions.row(f).segment<3>(3 * j) + 0.4 * standard_normal(1, 3, rng);
      }
    }
  }
  return s;
}

TEST(ErrorMetrics, SingleKeyframeExample) {
  GlobalMotion g;
  g.positions = Eigen::MatrixXd::Zero(3, 3 * kJoints);
  g.root_yaw = Eigen::VectorXd::Zero(3);
  TrajectorySpec s = TrajectorySpec::empty(3, kJoints);
  s.mask(1, 0) = 1.0;
  s.targets(1, 0) = 0.03;
  s.targets(1, 1) = 0.04;
  EXPECT_NEAR(average_error({g}, {s}), 5.0, 1e-12);
  EXPECT_EQ(trajectory_error({g}, {s}), 0.0);
  EXPECT_EQ(location_error({g}, {s}), 0.0);
  s.targets(1, 2) = 0.6;
  EXPECT_EQ(trajectory_error({g}, {s}), 100.0);
}

TEST(ErrorMetrics, MatchLoopOracles) {
  Rng rng(11);
  std::vector<GlobalMotion> gen;
  std::vector<TrajectorySpec> specs;
  for (int i = 0; i < 20; ++i) {
    const GlobalMotion ref = random_world(9, rng);
    specs.push_back(random_spec(ref, rng));
    gen.push_back(ref);
  }
  long failed_samples = 0, keys = 0, failed_keys = 0;
  double dist_sum = 0.0;
  for (size_t i = 0; i < gen.size(); ++i) {
    bool any = false;
    for (int f = 0; f < 9; ++f) {
      for (int j = 0; j < kJoints; ++j) {
        if (specs[i].mask(f, j) == 0.0) continue;
        double sq = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double d = gen[i].positions(f, 3 * j + a) - specs[i].targets(f, 3 * j + a);
          sq += d * d;
        }
        const double d = std::sqrt(sq);
        ++keys;
        dist_sum += d;
        if (d > 0.5) {
          ++failed_keys;
          any = true;
        }
      }
    }
    if (any) ++failed_samples;
  }
  ASSERT_GT(failed_keys, 0);
  ASSERT_LT(failed_keys, keys);
  EXPECT_NEAR(trajectory_error(gen, specs), 100.0 * failed_samples / 20.0, 1e-9);
  EXPECT_NEAR(location_error(gen, specs), 100.0 * failed_keys / keys, 1e-9);
  EXPECT_NEAR(average_error(gen, specs), 100.0 * dist_sum / keys, 1e-9);
  EXPECT_EQ(static_cast<long>(keyframe_errors(gen[0], specs[0]).size()), specs[0].masked_count());
}

TEST(FootSkating, FiveOfTwentyTransitionsSlide) {
  const int frames = 21;
  GlobalMotion g;
  g.positions = Eigen::MatrixXd::Zero(frames, 3 * kJoints);
  g.root_yaw = Eigen::VectorXd::Zero(frames);
  const int foot = kToy.foot_joints[0];
  double x = 0.0;
  for (int f = 0; f < frames; ++f) {
    g.positions(f, 3 * foot) = x;
    if (f < 5) x += 0.03;
  }
  // The other foot is high in the air and slides every frame.
  const int other = kToy.foot_joints[1];
  for (int f = 0; f < frames; ++f) {
    g.positions(f, 3 * other + 1) = 0.4;
    g.positions(f, 3 * other + 2) = 0.1 * f;
  }
  EXPECT_DOUBLE_EQ(foot_skating_ratio(g, kToy), 0.25);
}

TEST(FootSkating, StaticMotionDoesNotSkate) {
  GlobalMotion g;
  g.positions = Eigen::MatrixXd::Zero(10, 3 * kJoints);
  g.root_yaw = Eigen::VectorXd::Zero(10);
  EXPECT_EQ(foot_skating_ratio(g, kToy), 0.0);
}

TEST(Diversity, EquidistantRowsGiveThatDistance) {
  const Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(10, 10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_NEAR(diversity(basis, 5, seed), std::sqrt(2.0), 1e-12);
  }
  Eigen::MatrixXd two(2, 3);
  two << 0, 0, 0, 1, 2, 2;
  EXPECT_NEAR(diversity(two, 1), 3.0, 1e-12);
  EXPECT_EQ(diversity(Eigen::MatrixXd::Ones(8, 4), 4), 0.0);
  EXPECT_THROW(diversity(basis, 6), DataError);
}

TEST(Frechet, OneDimensionalClosedForm) {
  const Eigen::VectorXd m1 = Eigen::VectorXd::Constant(1, 0.0);
  const Eigen::VectorXd m2 = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::MatrixXd c1 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd c2 = Eigen::MatrixXd::Constant(1, 1, 4.0);
  // (0-1)^2 + 1 + 4 - 2*sqrt(4)
  EXPECT_NEAR(frechet_distance(m1, c1, m2, c2), 2.0, 1e-12);
  EXPECT_NEAR(frechet_distance(m1, c1, m1, c1), 0.0, 1e-12);
}

TEST(Frechet, DiagonalOracleSymmetryIdentity) {
  Rng rng(12);
  const int d = 6;
  const Eigen::VectorXd a = standard_normal(d, 1, rng);
  const Eigen::VectorXd b = standard_normal(d, 1, rng);
  const Eigen::VectorXd va = standard_normal(d, 1, rng).array().square() + 0.1;
  const Eigen::VectorXd vb = standard_normal(d, 1, rng).array().square() + 0.1;
  const double expected =
      (a - b).squaredNorm() + (va.cwiseSqrt() - vb.cwiseSqrt()).squaredNorm();
  EXPECT_NEAR(frechet_distance(a, va.asDiagonal().toDenseMatrix(), b,
                               vb.asDiagonal().toDenseMatrix()),
              expected, 1e-10);

  const Eigen::MatrixXd la = standard_normal(d, d, rng), lb = standard_normal(d, d, rng);
  const Eigen::MatrixXd ca = la * la.transpose(), cb = lb * lb.transpose();
  EXPECT_NEAR(frechet_distance(a, ca, b, cb), frechet_distance(b, cb, a, ca), 1e-9);
  EXPECT_NEAR(frechet_distance(a, ca, a, ca), 0.0, 1e-9);
  EXPECT_GE(frechet_distance(a, ca, b, cb), 0.0);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(d, d);
  bad(0, 0) = -1.0;
  EXPECT_THROW(frechet_distance(a, bad, b, cb), NumericError);
}

TEST(Frechet, ProxyOfIdenticalSetsIsZero) {
  Rng rng(13);
  const Eigen::MatrixXd f = standard_normal(40, 5, rng);
  EXPECT_NEAR(fid_proxy(f, f), 0.0, 1e-9);
  const GaussianStats s = GaussianStats::of(f);
  EXPECT_EQ(s.mean.size(), 5);
  EXPECT_EQ(s.cov.rows(), 5);
}

TEST(Features, StaticMotion) {
  GlobalMotion g;
  g.positions = Eigen::MatrixXd::Constant(12, 3 * kJoints, 0.7);
  g.root_yaw = Eigen::VectorXd::Zero(12);
  const Eigen::VectorXd f = extract_motion_features(g);
  ASSERT_EQ(f.size(), motion_feature_dim(kJoints));
  for (int j = 0; j < kJoints; ++j) {
    EXPECT_EQ(f[6 * j], 0.0);
    EXPECT_EQ(f[6 * j + 2], 0.0);
    EXPECT_NEAR(f[6 * j + 4], 0.7, 1e-12);
    EXPECT_NEAR(f[6 * j + 5], 0.0, 1e-12);
  }
  EXPECT_EQ(f[6 * kJoints], 0.0);
}

TEST(Features, TimeReversalInvariant) {
  Rng rng(14);
  const GlobalMotion g = random_world(15, rng);
  GlobalMotion r = g;
  r.positions = g.positions.colwise().reverse();
  EXPECT_LT((extract_motion_features(g) - extract_motion_features(r)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Features, PathLengthIsHorizontal) {
  GlobalMotion g;
  g.positions = Eigen::MatrixXd::Zero(11, 3 * kJoints);
  g.root_yaw = Eigen::VectorXd::Zero(11);
  for (int f = 0; f < 11; ++f) {
    g.positions(f, 0) = 0.06 * f;
    g.positions(f, 1) = 0.3 * (f % 2);  // vertical bobbing is ignored
    g.positions(f, 2) = 0.08 * f;
  }
  EXPECT_NEAR(extract_motion_features(g)[6 * kJoints], 1.0, 1e-12);
}

TEST(RPrecision, PerfectEmbeddingsAlwaysHit) {
  Rng rng(15);
  const Eigen::MatrixXd e = standard_normal(40, 8, rng);
  const auto r = r_precision(e, e, 32, 1);
  EXPECT_EQ(r[0], 1.0);
  EXPECT_EQ(r[2], 1.0);
}

TEST(RPrecision, PoolOfTwo) {
  // Motion i sits next to text i+1 (cyclic), so with pool 2 the own text wins
  // exactly when the drawn distractor is not i+1.
  const int n = 4;
  Eigen::MatrixXd text(n, 1), motion(n, 1);
  for (int i = 0; i < n; ++i) {
    text(i, 0) = 10.0 * i;
    motion(i, 0) = 10.0 * i;
  }
  const auto self = r_precision(motion, text, 2, 3);
  EXPECT_EQ(self[0], 1.0);
  // Motion sits halfway (minus a bit) towards the next text: own text still
  // closer than any distractor.
  motion.array() += 4.0;
  EXPECT_EQ(r_precision(motion, text, 2, 3)[0], 1.0);
  motion.array() += 2.0;  // now 6 away from own, 4 from the next one
  const auto r = r_precision(motion, text, 2, 3);
  EXPECT_GE(r[0], 0.0);
  EXPECT_LT(r[0], 1.0);
  EXPECT_EQ(r[1], 1.0);
}

TEST(RPrecision, ChanceLevel) {
  Rng rng(16);
  const Eigen::MatrixXd m = standard_normal(4000, 4, rng);
  const Eigen::MatrixXd t = standard_normal(4000, 4, rng);
  const auto r = r_precision(m, t, 32, 2);
  EXPECT_NEAR(r[0], 1.0 / 32, 0.01);
  EXPECT_NEAR(r[2], 3.0 / 32, 0.015);
  EXPECT_THROW(r_precision(m, t, 1, 0), ConfigError);
  EXPECT_THROW(r_precision(m.topRows(10), t.topRows(10), 32, 0), DataError);
}

TEST(Embedder, RecoversLinearMap) {
  Rng rng(17);
  const Eigen::MatrixXd f = standard_normal(200, 5, rng);
  const Eigen::MatrixXd w = standard_normal(5, 3, rng);
  const Eigen::MatrixXd t = f * w;
  const MotionTextEmbedder e = MotionTextEmbedder::fit(f, t, 1e-8);
  EXPECT_LT((e.embed(f) - t).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_THROW(e.embed(Eigen::MatrixXd::Zero(2, 4)), TensorError);
}

TEST(Report, RowHasAllColumns) {
  MetricsReport r;
  r.avg_err_cm = 1.5;
  std::ostringstream head, row;
  MetricsReport::print_header(head);
  r.print_row(row, "pelvis");
  EXPECT_NE(head.str().find("Avg.err(cm)"), std::string::npos);
  EXPECT_NE(row.str().find("1.50"), std::string::npos);
  EXPECT_EQ(r.to_json().at("avg_err_cm"), 1.5);
}

}  // namespace
}  // namespace trajmotion
