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

#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "trajmotion/representation.h"
#include "trajmotion/trajectory.h"

namespace trajmotion {

// Euclidean error of every masked joint-frame, row-major over (frame, joint).
std::vector<double> keyframe_errors(const GlobalMotion& generated, const TrajectorySpec& spec);

// Percent of samples with any masked keyframe error above `threshold` meters.
double trajectory_error(const std::vector<GlobalMotion>& generated,
                        const std::vector<TrajectorySpec>& specs, double threshold = 0.5);

// Percent of masked keyframes, pooled over the batch, with error above
// `threshold` meters.
double location_error(const std::vector<GlobalMotion>& generated,
                      const std::vector<TrajectorySpec>& specs, double threshold = 0.5);

// Mean keyframe distance pooled over the batch, in centimeters.
double average_error(const std::vector<GlobalMotion>& generated,
                     const std::vector<TrajectorySpec>& specs);

// Fraction of the F-1 frame transitions in which either foot moves more than
// `skate_dist` horizontally while its height at the first frame is below
// `height`.
double foot_skating_ratio(const GlobalMotion& motion, const Skeleton& skeleton,
                          double skate_dist = 0.025, double height = 0.05);

// Rows are samples. Pairs the first subset_size entries of a seeded
// permutation with the next subset_size.
double diversity(const Eigen::MatrixXd& features, int subset_size, std::uint64_t seed = 0);

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1,
                        const Eigen::VectorXd& mu2, const Eigen::MatrixXd& cov2);

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  static GaussianStats of(const Eigen::MatrixXd& features);
};

double fid_proxy(const Eigen::MatrixXd& generated_features, const Eigen::MatrixXd& real_features);

// Per joint: mean and std of speed and of acceleration magnitude, mean and
// std of height; then root path length (horizontal).
int motion_feature_dim(int joint_count);
Eigen::VectorXd extract_motion_features(const GlobalMotion& motion);
Eigen::MatrixXd feature_matrix(const std::vector<GlobalMotion>& motions);

// Ridge regression from standardized motion features to text embeddings.
class MotionTextEmbedder {
 public:
  static MotionTextEmbedder fit(const Eigen::MatrixXd& features, const Eigen::MatrixXd& text,
                                double ridge = 1e-2);
  Eigen::MatrixXd embed(const Eigen::MatrixXd& features) const;

 private:
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd scale_;
  Eigen::MatrixXd weights_;  // (features + 1) x text dim
};

// Rows of motion_embeddings and text_embeddings are paired. For each motion,
// the true text competes with pool-1 distractors drawn from the other rows;
// its rank is the number of distractors strictly closer. Returns top-1/2/3
// hit rates.
std::array<double, 3> r_precision(const Eigen::MatrixXd& motion_embeddings,
                                  const Eigen::MatrixXd& text_embeddings, int pool = 32,
                                  std::uint64_t seed = 0);

struct MetricsReport {
  double traj_err_pct = 0.0;
  double loc_err_pct = 0.0;
  double avg_err_cm = 0.0;
  double foot_skating_ratio = 0.0;
  double diversity = 0.0;
  double fid_proxy = 0.0;
  std::array<double, 3> r_precision_top_k{};
  int samples = 0;
  double seconds_per_sample = 0.0;

  nlohmann::json to_json() const;
  static void print_header(std::ostream& out);
  void print_row(std::ostream& out, const std::string& label) const;
};

}  // namespace trajmotion
