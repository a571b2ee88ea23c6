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

#include "trajmotion/representation.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Geometry>

#include "trajmotion/errors.h"

namespace trajmotion {

int Skeleton::index_of(const std::string& joint_name) const {
  auto it = std::find(joint_names.begin(), joint_names.end(), joint_name);
  if (it == joint_names.end()) {
    throw ConfigError("unknown joint '" + joint_name + "'");
  }
  return static_cast<int>(it - joint_names.begin());
}

void Skeleton::validate() const {
  const int j = joint_count();
  if (j < kControllableJointCount) {
    throw ConfigError("skeleton needs at least 6 joints");
  }
  if (static_cast<int>(parents.size()) != j ||
      static_cast<int>(rest_offsets.size()) != j) {
    throw ConfigError("skeleton parent/offset arrays do not match joint count");
  }
  if (parents[0] != -1 || controllable_joints[0] != 0) {
    throw ConfigError("pelvis must be joint 0 and the root");
  }
  for (int i = 1; i < j; ++i) {
    if (parents[i] < 0 || parents[i] >= j || parents[i] == i) {
      throw ConfigError("joint " + std::to_string(i) + " has an invalid parent");
    }
    // Every chain must reach the root within j hops.
    int node = i;
    for (int hops = 0; node != 0; ++hops) {
      if (hops > j) throw ConfigError("skeleton parents contain a cycle");
      node = parents[node];
    }
  }
  std::set<int> seen;
  for (int idx : controllable_joints) {
    if (idx < 0 || idx >= j || !seen.insert(idx).second) {
      throw ConfigError("controllable joints must be distinct valid indices");
    }
  }
  for (int idx : heel_toe_joints) {
    if (idx < 0 || idx >= j) throw ConfigError("invalid heel/toe joint index");
  }
  for (int idx : foot_joints) {
    if (idx < 0 || idx >= j) throw ConfigError("invalid foot joint index");
  }
}

Skeleton Skeleton::toy() {
  Skeleton s;
  s.name = "toy8";
  s.joint_names = {"pelvis",    "head",      "left_wrist", "right_wrist",
                   "left_foot", "right_foot", "left_knee",  "right_knee"};
  s.parents = {-1, 0, 0, 0, 6, 7, 0, 0};
  // Facing +Z with +Y up, so the character's left is +X.
  s.rest_offsets = {{0.0, 0.9, 0.0},   {0.0, 0.65, 0.0}, {0.2, -0.1, 0.0},
                    {-0.2, -0.1, 0.0}, {0.0, -0.45, 0.0}, {0.0, -0.45, 0.0},
                    {0.1, -0.45, 0.0}, {-0.1, -0.45, 0.0}};
  s.controllable_joints = {0, 4, 5, 1, 2, 3};
  s.heel_toe_joints = {4, 4, 5, 5};
  s.foot_joints = {4, 5};
  return s;
}

const char* to_string(RepresentationKind kind) {
  switch (kind) {
    case RepresentationKind::kSimplified:
      return "simplified";
    case RepresentationKind::kPositionRotation:
      return "position_rotation";
    case RepresentationKind::kRedundant:
      return "redundant";
  }
  return "?";
}

RepresentationKind representation_from_string(const std::string& name) {
  if (name == "simplified") return RepresentationKind::kSimplified;
  if (name == "position_rotation") return RepresentationKind::kPositionRotation;
  if (name == "redundant") return RepresentationKind::kRedundant;
  throw ConfigError("unknown representation '" + name + "'");
}

ChannelLayout::ChannelLayout(RepresentationKind kind, int joint_count)
    : kind_(kind), joint_count_(joint_count) {
  if (joint_count < 2) throw RepresentationError("layout needs at least 2 joints");
}

int ChannelLayout::width() const {
  int w = position_prefix();
  if (has_rotations()) w += 6 * joint_count_;
  if (has_velocities()) w += 3 * joint_count_;
  if (has_contacts()) w += 4;
  return w;
}

int ChannelLayout::joint_position(int joint) const {
  if (joint < 1 || joint >= joint_count_) {
    throw RepresentationError("joint has no local position channel");
  }
  return 4 + 3 * (joint - 1);
}

int ChannelLayout::joint_rotation(int joint) const {
  if (!has_rotations() || joint < 0 || joint >= joint_count_) {
    throw RepresentationError("layout has no rotation channel for joint");
  }
  return position_prefix() + 6 * joint;
}

int ChannelLayout::joint_velocity(int joint) const {
  if (!has_velocities() || joint < 0 || joint >= joint_count_) {
    throw RepresentationError("layout has no velocity channel for joint");
  }
  return position_prefix() + 6 * joint_count_ + 3 * joint;
}

int ChannelLayout::foot_contact(int label) const {
  if (!has_contacts() || label < 0 || label >= 4) {
    throw RepresentationError("layout has no foot contact channel");
  }
  return position_prefix() + 9 * joint_count_ + label;
}

std::string ChannelLayout::channel_name(int column) const {
  static const char* kAxes[] = {"x", "y", "z"};
  if (column < 0 || column >= width()) throw RepresentationError("column out of range");
  if (column == 0) return "r_a";
  if (column == 1) return "r_x";
  if (column == 2) return "r_z";
  if (column == 3) return "r_y";
  int c = column - 4;
  if (c < 3 * (joint_count_ - 1)) {
    return "j_p[" + std::to_string(c / 3 + 1) + "]." + kAxes[c % 3];
  }
  c -= 3 * (joint_count_ - 1);
  if (c < 6 * joint_count_) {
    return "j_r[" + std::to_string(c / 6) + "]." + std::to_string(c % 6);
  }
  c -= 6 * joint_count_;
  if (c < 3 * joint_count_) {
    return "j_v[" + std::to_string(c / 3) + "]." + kAxes[c % 3];
  }
  c -= 3 * joint_count_;
  return "c_f[" + std::to_string(c) + "]";
}

Motion::Motion(ChannelLayout layout, MotionTensor data)
    : layout_(layout), data_(std::move(data)) {
  if (data_.cols() != layout_.width()) {
    throw RepresentationError("tensor has " + std::to_string(data_.cols()) +
                              " channels, layout expects " +
                              std::to_string(layout_.width()));
  }
}

Motion Motion::zeros(ChannelLayout layout, int frames) {
  return Motion(layout, MotionTensor::Zero(frames, layout.width()));
}

Motion Motion::from_channels(const MotionChannels& ch, int joint_count) {
  const size_t frames = ch.r_a.size();
  auto check = [&](size_t n, const char* what) {
    if (n != frames) {
      throw RepresentationError(std::string("channel ") + what + " has " +
                                std::to_string(n) + " frames, expected " +
                                std::to_string(frames));
    }
  };
  check(ch.r_xz.size(), "r_xz");
  check(ch.r_y.size(), "r_y");
  check(ch.j_p.size(), "j_p");
  const bool rot = !ch.j_r.empty();
  const bool vel = !ch.j_v.empty();
  const bool contact = !ch.c_f.empty();
  if (rot) check(ch.j_r.size(), "j_r");
  if (vel) check(ch.j_v.size(), "j_v");
  if (contact) check(ch.c_f.size(), "c_f");

  RepresentationKind kind = RepresentationKind::kSimplified;
  if (rot && vel && contact) {
    kind = RepresentationKind::kRedundant;
  } else if (rot && !vel && !contact) {
    kind = RepresentationKind::kPositionRotation;
  } else if (rot || vel || contact) {
    throw RepresentationError("incomplete set of redundant channels");
  }
  ChannelLayout layout(kind, joint_count);
  Motion m = zeros(layout, static_cast<int>(frames));
  for (size_t f = 0; f < frames; ++f) {
    const int i = static_cast<int>(f);
    m.data_(i, 0) = ch.r_a[f];
    m.data_(i, 1) = ch.r_xz[f].x();
    m.data_(i, 2) = ch.r_xz[f].y();
    m.data_(i, 3) = ch.r_y[f];
    if (static_cast<int>(ch.j_p[f].size()) != joint_count - 1) {
      throw RepresentationError("j_p joint count mismatch");
    }
    for (int jj = 1; jj < joint_count; ++jj) {
      m.data_.row(i).segment<3>(layout.joint_position(jj)) = ch.j_p[f][jj - 1].transpose();
    }
    if (rot) {
      if (static_cast<int>(ch.j_r[f].size()) != joint_count) {
        throw RepresentationError("j_r joint count mismatch");
      }
      for (int jj = 0; jj < joint_count; ++jj) {
        m.data_.row(i).segment<6>(layout.joint_rotation(jj)) = ch.j_r[f][jj].transpose();
      }
    }
    if (vel) {
      if (static_cast<int>(ch.j_v[f].size()) != joint_count) {
        throw RepresentationError("j_v joint count mismatch");
      }
      for (int jj = 0; jj < joint_count; ++jj) {
        m.data_.row(i).segment<3>(layout.joint_velocity(jj)) = ch.j_v[f][jj].transpose();
      }
    }
    if (contact) {
      for (int k = 0; k < 4; ++k) {
        const double v = ch.c_f[f][k];
        if (v != 0.0 && v != 1.0) throw RepresentationError("c_f entries must be 0 or 1");
        m.data_(i, layout.foot_contact(k)) = v;
      }
    }
  }
  return m;
}

double Motion::root_angular(int frame) const { return data_(frame, 0); }

Eigen::Vector2d Motion::root_linear(int frame) const {
  return {data_(frame, 1), data_(frame, 2)};
}

double Motion::root_height(int frame) const { return data_(frame, 3); }

Eigen::Vector3d Motion::joint_position(int frame, int joint) const {
  return data_.row(frame).segment<3>(layout_.joint_position(joint)).transpose();
}

Eigen::Vector2d rotate_y(double yaw, const Eigen::Vector2d& xz) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * xz.x() + s * xz.y(), -s * xz.x() + c * xz.y()};
}

Eigen::Matrix3d rotation_y(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

namespace {

// d/dyaw of rotate_y.
Eigen::Vector2d rotate_y_derivative(double yaw, const Eigen::Vector2d& xz) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {-s * xz.x() + c * xz.y(), -c * xz.x() - s * xz.y()};
}

// Transpose of rotate_y (rotation by -yaw).
Eigen::Vector2d rotate_y_transpose(double yaw, const Eigen::Vector2d& xz) {
  return rotate_y(-yaw, xz);
}

void check_prefix(const MotionTensor& data, int joint_count) {
  if (joint_count < 2) throw RepresentationError("need at least 2 joints");
  if (data.cols() < 4 + 3 * (joint_count - 1)) {
    throw RepresentationError("tensor is narrower than the position prefix");
  }
  if (data.rows() < 1) throw RepresentationError("motion has no frames");
}

}  // namespace

GlobalMotion to_global(const MotionTensor& data, int joint_count) {
  check_prefix(data, joint_count);
  const int frames = static_cast<int>(data.rows());
  GlobalMotion g;
  g.positions.resize(frames, 3 * joint_count);
  g.root_yaw.resize(frames);
  double yaw = 0.0;
  Eigen::Vector2d root = Eigen::Vector2d::Zero();
  for (int i = 0; i < frames; ++i) {
    g.root_yaw[i] = yaw;
    g.positions(i, 0) = root.x();
    g.positions(i, 1) = data(i, 3);
    g.positions(i, 2) = root.y();
    for (int jj = 1; jj < joint_count; ++jj) {
      const int c = 4 + 3 * (jj - 1);
      const Eigen::Vector2d xz = rotate_y(yaw, {data(i, c), data(i, c + 2)}) + root;
      g.positions(i, 3 * jj) = xz.x();
      g.positions(i, 3 * jj + 1) = data(i, c + 1);
      g.positions(i, 3 * jj + 2) = xz.y();
    }
    root += rotate_y(yaw, {data(i, 1), data(i, 2)});
    yaw += data(i, 0);
  }
  return g;
}

GlobalMotion to_global(const Motion& motion, const Skeleton& skeleton) {
  if (motion.layout().joint_count() != skeleton.joint_count()) {
    throw RepresentationError("motion and skeleton joint counts differ");
  }
  return to_global(motion.data(), skeleton.joint_count());
}

MotionTensor to_global_backward(const MotionTensor& data, int joint_count,
                                const Eigen::MatrixXd& grad_positions) {
  check_prefix(data, joint_count);
  const int frames = static_cast<int>(data.rows());
  if (grad_positions.rows() != frames || grad_positions.cols() != 3 * joint_count) {
    throw TensorError("gradient shape does not match global positions");
  }
  MotionTensor grad = MotionTensor::Zero(data.rows(), data.cols());

  // Forward pass values needed by the reverse sweep.
  Eigen::VectorXd yaw(frames);
  double acc = 0.0;
  for (int i = 0; i < frames; ++i) {
    yaw[i] = acc;
    acc += data(i, 0);
  }

  // translation_grad[i]: gradient on the accumulated root XZ at frame i.
  // Root XZ at frame i depends on r_xz[k] and yaw[k] for k < i, so both
  // receive suffix sums over later frames.
  Eigen::Vector2d later_translation = Eigen::Vector2d::Zero();
  double later_yaw = 0.0;
  for (int i = frames - 1; i >= 0; --i) {
    // Contributions of frame i's own positions.
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();
    double dyaw = 0.0;
    translation += Eigen::Vector2d(grad_positions(i, 0), grad_positions(i, 2));
    grad(i, 3) += grad_positions(i, 1);
    for (int jj = 1; jj < joint_count; ++jj) {
      const int c = 4 + 3 * (jj - 1);
      const Eigen::Vector2d g_xz(grad_positions(i, 3 * jj), grad_positions(i, 3 * jj + 2));
      translation += g_xz;
      const Eigen::Vector2d local(data(i, c), data(i, c + 2));
      const Eigen::Vector2d d_local = rotate_y_transpose(yaw[i], g_xz);
      grad(i, c) += d_local.x();
      grad(i, c + 1) += grad_positions(i, 3 * jj + 1);
      grad(i, c + 2) += d_local.y();
      dyaw += g_xz.dot(rotate_y_derivative(yaw[i], local));
    }
    // r_xz[i] and yaw[i] feed the root translation of frames i+1..F-1.
    const Eigen::Vector2d v(data(i, 1), data(i, 2));
    const Eigen::Vector2d d_v = rotate_y_transpose(yaw[i], later_translation);
    grad(i, 1) += d_v.x();
    grad(i, 2) += d_v.y();
    dyaw += later_translation.dot(rotate_y_derivative(yaw[i], v));

    // r_a[i] feeds yaw of frames i+1..F-1.
    grad(i, 0) += later_yaw;
    later_yaw += dyaw;
    later_translation += translation;
  }
  return grad;
}

Eigen::MatrixXd derive_foot_contact(const GlobalMotion& motion, const Skeleton& skeleton,
                                    const FootContactThresholds& thresholds) {
  if (!(thresholds.velocity > 0.0) || !(thresholds.height > 0.0)) {
    throw ConfigError("foot contact thresholds must be positive");
  }
  const int frames = motion.frames();
  if (frames < 2) throw RepresentationError("foot contact needs at least 2 frames");
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(frames, 4);
  for (int i = 1; i < frames; ++i) {
    for (int k = 0; k < 4; ++k) {
      const int joint = skeleton.heel_toe_joints[k];
      const Eigen::Vector3d p = motion.position(i, joint);
      const double speed = (p - motion.position(i - 1, joint)).norm();
      labels(i, k) = (speed < thresholds.velocity && p.y() < thresholds.height) ? 1.0 : 0.0;
    }
  }
  labels.row(0) = labels.row(1);
  return labels;
}

Motion simplified_from_redundant(const Motion& motion) {
  const ChannelLayout target = ChannelLayout::simplified(motion.layout().joint_count());
  return Motion(target, motion.data().leftCols(target.width()));
}

Motion embed_in_layout(const Motion& motion, const ChannelLayout& target) {
  if (target.joint_count() != motion.layout().joint_count() ||
      target.width() < motion.layout().width()) {
    throw RepresentationError("target layout cannot hold the source channels");
  }
  Motion out = Motion::zeros(target, motion.frames());
  out.data().leftCols(motion.layout().width()) = motion.data();
  return out;
}

Eigen::Matrix<double, 6, 1> rotation_to_6d(const Eigen::Matrix3d& rotation) {
  Eigen::Matrix<double, 6, 1> six;
  six << rotation.col(0), rotation.col(1);
  return six;
}

Eigen::Matrix3d rotation_from_6d(const Eigen::Matrix<double, 6, 1>& six) {
  const Eigen::Vector3d a = six.head<3>().normalized();
  Eigen::Vector3d b = six.tail<3>() - a.dot(six.tail<3>()) * a;
  b.normalize();
  Eigen::Matrix3d r;
  r.col(0) = a;
  r.col(1) = b;
  r.col(2) = a.cross(b);
  return r;
}

}  // namespace trajmotion
