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

#include "trajmotion/trajectory.h"

#include <algorithm>

#include "trajmotion/errors.h"

namespace trajmotion {

TrajectorySpec TrajectorySpec::empty(int frames, int joint_count) {
  TrajectorySpec s;
  s.targets = Eigen::MatrixXd::Zero(frames, 3 * joint_count);
  s.mask = Eigen::MatrixXd::Zero(frames, joint_count);
  return s;
}

TrajectorySpec TrajectorySpec::from_global(const GlobalMotion& reference,
                                           const std::vector<int>& joints,
                                           const std::vector<int>& frames) {
  TrajectorySpec s = empty(reference.frames(), reference.joint_count());
  for (int joint : joints) {
    if (joint < 0 || joint >= reference.joint_count()) throw ConfigError("joint out of range");
    for (int f : frames) {
      if (f < 0 || f >= reference.frames()) throw ConfigError("frame out of range");
      s.mask(f, joint) = 1.0;
      s.targets.row(f).segment<3>(3 * joint) = reference.positions.row(f).segment<3>(3 * joint);
    }
  }
  s.controlled_joints = joints;
  std::sort(s.controlled_joints.begin(), s.controlled_joints.end());
  s.controlled_joints.erase(std::unique(s.controlled_joints.begin(), s.controlled_joints.end()),
                            s.controlled_joints.end());
  return s;
}

int TrajectorySpec::masked_count() const {
  return static_cast<int>((mask.array() != 0.0).count());
}

void TrajectorySpec::validate() const {
  if (targets.rows() != mask.rows() || targets.cols() != 3 * mask.cols()) {
    throw ConfigError("trajectory targets and mask disagree in shape");
  }
  for (Eigen::Index f = 0; f < mask.rows(); ++f) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      const double m = mask(f, j);
      if (m != 0.0 && m != 1.0) throw ConfigError("trajectory mask must be binary");
      if (m == 1.0 && !targets.row(f).segment<3>(3 * j).allFinite()) {
        throw ConfigError("trajectory target is not finite under the mask");
      }
    }
  }
}

nlohmann::json TrajectorySpec::to_json(const Skeleton& skeleton) const {
  nlohmann::json joints = nlohmann::json::object();
  for (int j = 0; j < joint_count(); ++j) {
    nlohmann::json keys = nlohmann::json::array();
    for (int f = 0; f < frames(); ++f) {
      if (mask(f, j) == 0.0) continue;
      const Eigen::Vector3d p = target(f, j);
      keys.push_back({f, p.x(), p.y(), p.z()});
    }
    if (!keys.empty()) joints[skeleton.joint_names.at(j)] = keys;
  }
  return {{"frames", frames()}, {"joints", joints}};
}

TrajectorySpec TrajectorySpec::from_json(const nlohmann::json& j, const Skeleton& skeleton) {
  const int frames = j.at("frames").get<int>();
  if (frames < 1) throw ConfigError("trajectory needs at least one frame");
  TrajectorySpec s = empty(frames, skeleton.joint_count());
  for (const auto& [name, keys] : j.at("joints").items()) {
    const int joint = skeleton.index_of(name);
    for (const auto& key : keys) {
      const int f = key.at(0).get<int>();
      if (f < 0 || f >= frames) throw ConfigError("keyframe index out of range");
      s.mask(f, joint) = 1.0;
      s.targets.row(f).segment<3>(3 * joint) << key.at(1).get<double>(), key.at(2).get<double>(),
          key.at(3).get<double>();
    }
    s.controlled_joints.push_back(joint);
  }
  std::sort(s.controlled_joints.begin(), s.controlled_joints.end());
  s.validate();
  return s;
}

Eigen::MatrixXd trajectory_features(const TrajectorySpec& spec, const Skeleton& skeleton,
                                    double position_scale) {
  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(spec.frames(), kTrajectoryFeatureWidth);
  for (int f = 0; f < spec.frames(); ++f) {
    for (int slot = 0; slot < kControllableJointCount; ++slot) {
      const int joint = skeleton.controllable_joints[slot];
      if (spec.mask(f, joint) == 0.0) continue;
      features.row(f).segment<3>(3 * slot) = spec.target(f, joint).transpose() / position_scale;
      features(f, 3 * kControllableJointCount + slot) = 1.0;
    }
  }
  return features;
}

}  // namespace trajmotion
