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
#include <string>
#include <vector>

#include <Eigen/Core>

namespace trajmotion {

// Frames x channels. Every motion tensor in the library uses this shape.
using MotionTensor = Eigen::MatrixXd;

// Number of skeleton joints that trajectories may constrain.
inline constexpr int kControllableJointCount = 6;

struct Skeleton {
  std::string name;
  std::vector<std::string> joint_names;
  std::vector<int> parents;  // -1 for the root
  std::vector<Eigen::Vector3d> rest_offsets;  // meters, relative to parent
  // pelvis, left foot, right foot, head, left wrist, right wrist
  std::array<int, kControllableJointCount> controllable_joints{};
  // left heel, left toe, right heel, right toe
  std::array<int, 4> heel_toe_joints{};
  // left foot, right foot
  std::array<int, 2> foot_joints{};

  int joint_count() const { return static_cast<int>(joint_names.size()); }
  int index_of(const std::string& joint_name) const;

  // Throws ConfigError when the invariants do not hold.
  void validate() const;

  // Eight-joint stick figure: pelvis, head, wrists, feet and knees.
  static Skeleton toy();
};

enum class RepresentationKind {
  kSimplified,        // root channels + local joint positions
  kPositionRotation,  // + 6D joint rotations
  kRedundant,         // + joint velocities + foot contacts
};

const char* to_string(RepresentationKind kind);
RepresentationKind representation_from_string(const std::string& name);

// Column layout of a motion tensor. Shared channels keep the same column in
// every representation, so a simplified tensor is a column prefix of the
// redundant one:
//
//   0          r_a   root angular velocity about +Y (rad/frame)
//   1, 2       r_xz  root linear velocity in the facing frame (m/frame)
//   3          r_y   root height (m)
//   4 ..       j_p   joints 1..j-1, xyz each, root-facing frame
//   then       j_r   joints 0..j-1, 6D rotation each
//   then       j_v   joints 0..j-1, xyz each, facing frame (m/frame)
//   then       c_f   left heel, left toe, right heel, right toe
class ChannelLayout {
 public:
  ChannelLayout(RepresentationKind kind, int joint_count);

  static ChannelLayout simplified(int joint_count) {
    return {RepresentationKind::kSimplified, joint_count};
  }
  static ChannelLayout redundant(int joint_count) {
    return {RepresentationKind::kRedundant, joint_count};
  }

  RepresentationKind kind() const { return kind_; }
  int joint_count() const { return joint_count_; }
  int width() const;

  static constexpr int root_angular() { return 0; }
  static constexpr int root_linear() { return 1; }
  static constexpr int root_height() { return 3; }
  static constexpr int root_channel_count() { return 4; }

  // Columns [0, position_prefix()) hold everything to_global reads.
  int position_prefix() const { return 4 + 3 * (joint_count_ - 1); }
  int joint_position(int joint) const;
  int joint_rotation(int joint) const;
  int joint_velocity(int joint) const;
  int foot_contact(int label) const;

  bool has_rotations() const { return kind_ != RepresentationKind::kSimplified; }
  bool has_velocities() const { return kind_ == RepresentationKind::kRedundant; }
  bool has_contacts() const { return kind_ == RepresentationKind::kRedundant; }

  std::string channel_name(int column) const;

  bool operator==(const ChannelLayout&) const = default;

 private:
  RepresentationKind kind_;
  int joint_count_;
};

// Field-wise view used to assemble a motion from separate channel arrays.
struct MotionChannels {
  std::vector<double> r_a;
  std::vector<Eigen::Vector2d> r_xz;
  std::vector<double> r_y;
  std::vector<std::vector<Eigen::Vector3d>> j_p;  // frames x (joints-1)
  std::vector<std::vector<Eigen::Matrix<double, 6, 1>>> j_r;  // frames x joints
  std::vector<std::vector<Eigen::Vector3d>> j_v;  // frames x joints
  std::vector<std::array<double, 4>> c_f;
};

class Motion {
 public:
  Motion(ChannelLayout layout, MotionTensor data);

  // Throws RepresentationError when the channel arrays disagree on frame
  // count or joint count. The layout is inferred from which optional
  // channels are present.
  static Motion from_channels(const MotionChannels& channels, int joint_count);

  static Motion zeros(ChannelLayout layout, int frames);

  const ChannelLayout& layout() const { return layout_; }
  const MotionTensor& data() const { return data_; }
  MotionTensor& data() { return data_; }
  int frames() const { return static_cast<int>(data_.rows()); }

  double root_angular(int frame) const;
  Eigen::Vector2d root_linear(int frame) const;
  double root_height(int frame) const;
  Eigen::Vector3d joint_position(int frame, int joint) const;

 private:
  ChannelLayout layout_;
  MotionTensor data_;
};

struct GlobalMotion {
  Eigen::MatrixXd positions;  // frames x 3*joints, world frame, meters
  Eigen::VectorXd root_yaw;   // integrated heading, root_yaw[0] == 0

  int frames() const { return static_cast<int>(positions.rows()); }
  int joint_count() const { return static_cast<int>(positions.cols() / 3); }
  Eigen::Vector3d position(int frame, int joint) const {
    return positions.row(frame).segment<3>(3 * joint).transpose();
  }
};

// Rotation about +Y applied to the horizontal components (x, z).
Eigen::Vector2d rotate_y(double yaw, const Eigen::Vector2d& xz);
Eigen::Matrix3d rotation_y(double yaw);

// Local to world conversion. Reads only the first position_prefix() columns
// of `data`, so any representation (or a raw sampler tensor) can be passed.
// Integration order: heading and root position at frame i accumulate the
// per-frame channels of frames 0..i-1.
GlobalMotion to_global(const MotionTensor& data, int joint_count);
GlobalMotion to_global(const Motion& motion, const Skeleton& skeleton);

// Reverse-mode derivative of to_global. `grad_positions` has the shape of
// GlobalMotion::positions; the result has the shape of `data` with zeros in
// every column to_global does not read.
MotionTensor to_global_backward(const MotionTensor& data, int joint_count,
                                const Eigen::MatrixXd& grad_positions);

struct FootContactThresholds {
  double velocity = 0.002;  // m/frame
  double height = 0.05;     // m
};

// Frames x 4 binary labels ordered as Skeleton::heel_toe_joints.
Eigen::MatrixXd derive_foot_contact(const GlobalMotion& motion,
                                    const Skeleton& skeleton,
                                    const FootContactThresholds& thresholds = {});

// Copies the shared columns of any representation into a simplified motion.
Motion simplified_from_redundant(const Motion& motion);

// Zero-fills the columns `target` has beyond the source's layout.
Motion embed_in_layout(const Motion& motion, const ChannelLayout& target);

// 6D continuous rotation form: first two columns of the rotation matrix.
Eigen::Matrix<double, 6, 1> rotation_to_6d(const Eigen::Matrix3d& rotation);
Eigen::Matrix3d rotation_from_6d(const Eigen::Matrix<double, 6, 1>& six);

}  // namespace trajmotion
