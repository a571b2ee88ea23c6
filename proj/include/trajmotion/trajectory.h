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

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "trajmotion/representation.h"

namespace trajmotion {

// World-frame targets for a subset of joint-frames.
struct TrajectorySpec {
  Eigen::MatrixXd targets;  // frames x 3*joints, meters
  Eigen::MatrixXd mask;     // frames x joints, 1 where constrained
  std::vector<int> controlled_joints;

  static TrajectorySpec empty(int frames, int joint_count);

  // Constrains `joints` at `frames` to the positions of `reference`.
  static TrajectorySpec from_global(const GlobalMotion& reference, const std::vector<int>& joints,
                                    const std::vector<int>& frames);

  int frames() const { return static_cast<int>(mask.rows()); }
  int joint_count() const { return static_cast<int>(mask.cols()); }
  int masked_count() const;
  bool has_constraints() const { return masked_count() > 0; }
  Eigen::Vector3d target(int frame, int joint) const {
    return targets.row(frame).segment<3>(3 * joint).transpose();
  }

  // Throws ConfigError on shape problems, non-binary mask entries or
  // non-finite targets under the mask.
  void validate() const;

  // {"frames": F, "joints": {"pelvis": [[frame, x, y, z], ...], ...}}
  nlohmann::json to_json(const Skeleton& skeleton) const;
  static TrajectorySpec from_json(const nlohmann::json& j, const Skeleton& skeleton);
};

// Per-frame network condition: normalized targets of the six controllable
// joints followed by their presence flags. Unconstrained entries are zero.
inline constexpr int kTrajectoryFeatureWidth = 4 * kControllableJointCount;

Eigen::MatrixXd trajectory_features(const TrajectorySpec& spec, const Skeleton& skeleton,
                                    double position_scale);

}  // namespace trajmotion
