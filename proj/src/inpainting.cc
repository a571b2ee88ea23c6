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
#include <cmath>

#include "trajmotion/errors.h"

namespace trajmotion {

void MaskSpec::validate() const {
  if (mask.rows() != observed.rows() || mask.cols() != observed.cols()) {
    throw TensorError("mask and observed values disagree in shape");
  }
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      const double m = mask(r, c);
      if (m != 0.0 && m != 1.0) throw ConfigError("mask entries must be 0 or 1");
      if (m == 1.0 && !std::isfinite(observed(r, c))) {
        throw ConfigError("observed value is not finite under the mask");
      }
    }
  }
}

nlohmann::json MaskSpec::to_json(const Skeleton& skeleton, RepresentationKind kind) const {
  const ChannelLayout layout(kind, skeleton.joint_count());
  nlohmann::json joints = nlohmann::json::object();
  for (int j = 1; j < skeleton.joint_count(); ++j) {
    std::vector<int> frames_on;
    for (int f = 0; f < this->frames(); ++f) {
      if (mask(f, layout.joint_position(j)) != 0.0) frames_on.push_back(f);
    }
    if (!frames_on.empty()) joints[skeleton.joint_names[j]] = frames_on;
  }
  std::vector<int> root_frames;
  for (int f = 0; f < this->frames(); ++f) {
    if (mask(f, ChannelLayout::root_angular()) != 0.0) root_frames.push_back(f);
  }
  return {{"layout", to_string(kind)},
          {"frames", this->frames()},
          {"joints", joints},
          {"root_frames", root_frames}};
}

MaskSpec build_observation_mask(const MotionTensor& source, const Skeleton& skeleton,
                                const ChannelLayout& layout, const std::vector<int>& joints,
                                const std::vector<int>& frames, bool allow_any_joint) {
  if (joints.empty()) throw ConfigError("observation mask needs at least one joint");
  if (source.cols() < layout.position_prefix()) {
    throw TensorError("source motion lacks position channels");
  }
  const int frame_count = static_cast<int>(source.rows());
  MaskSpec spec;
  spec.mask = Eigen::MatrixXd::Zero(frame_count, layout.width());
  spec.observed = MotionTensor::Zero(frame_count, layout.width());
  for (int f = 0; f < frame_count; ++f) {
    spec.mask.row(f).head<4>().setOnes();
  }
  for (int joint : joints) {
    const auto& ctrl = skeleton.controllable_joints;
    if (!allow_any_joint && std::find(ctrl.begin(), ctrl.end(), joint) == ctrl.end()) {
      throw ConfigError("joint " + std::to_string(joint) + " is not controllable");
    }
    if (joint < 0 || joint >= skeleton.joint_count()) throw ConfigError("joint out of range");
    if (joint == 0) continue;  // root channels are always observed
    const int col = layout.joint_position(joint);
    for (int f : frames) {
      if (f < 0 || f >= frame_count) throw ConfigError("frame out of range");
      spec.mask.block(f, col, 1, 3).setOnes();
    }
  }
  const Eigen::Index prefix = layout.position_prefix();
  spec.observed.leftCols(prefix) =
      (spec.mask.leftCols(prefix).array() != 0.0).select(source.leftCols(prefix), 0.0);
  return spec;
}

const char* to_string(ObservationNoise mode) {
  return mode == ObservationNoise::kNoised ? "noised" : "clean";
}

ObservationNoise observation_noise_from_string(const std::string& name) {
  if (name == "noised") return ObservationNoise::kNoised;
  if (name == "clean") return ObservationNoise::kClean;
  throw ConfigError("unknown observation mode '" + name + "'");
}

MotionTensor substitute_observations(const MotionTensor& x_t, int t, const MaskSpec& spec,
                                     const NoiseSchedule& schedule, const MotionTensor& eps,
                                     ObservationNoise mode) {
  if (x_t.rows() != spec.mask.rows() || x_t.cols() != spec.mask.cols()) {
    throw TensorError("substitute_observations: tensor and mask shapes differ");
  }
  if (t < 0) throw StepError("substitution step must be >= 0");
  MotionTensor value;
  if (t == 0 || mode == ObservationNoise::kClean) {
    value = spec.observed;
  } else {
    value = q_sample(spec.observed, t, eps, schedule);
  }
  return (spec.mask.array() != 0.0).select(value, x_t);
}

RandomMask sample_training_mask(const MotionTensor& clean, const Skeleton& skeleton,
                                const ChannelLayout& layout, Rng& rng) {
  const int frames = static_cast<int>(clean.rows());
  if (frames == 0) throw DataError("cannot mask an empty motion");
  RandomMask out;
  std::vector<int> pool(skeleton.controllable_joints.begin(), skeleton.controllable_joints.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  const int count = std::uniform_int_distribution<int>(1, kControllableJointCount)(rng);
  out.joints.assign(pool.begin(), pool.begin() + count);
  std::sort(out.joints.begin(), out.joints.end());
  out.frame_count = std::uniform_int_distribution<int>(1, frames)(rng);
  out.first_frame = std::uniform_int_distribution<int>(0, frames - out.frame_count)(rng);

  MaskSpec& spec = out.spec;
  spec.mask = Eigen::MatrixXd::Zero(frames, layout.width());
  spec.mask.block(out.first_frame, 0, out.frame_count, 4).setOnes();
  for (int joint : out.joints) {
    if (joint == 0) continue;
    spec.mask.block(out.first_frame, layout.joint_position(joint), out.frame_count, 3).setOnes();
  }
  spec.observed = (spec.mask.array() != 0.0).select(clean, 0.0);
  return out;
}

SimBatch sim_prepare_batch(const std::vector<MotionTensor>& clean_batch,
                           const std::vector<int>& steps,
                           const std::vector<MotionTensor>& noise, double coin,
                           const Skeleton& skeleton, const ChannelLayout& layout,
                           const NoiseSchedule& schedule, const SimConfig& config,
                           Rng& mask_rng) {
  if (!(coin >= 0.0 && coin < 1.0)) throw ConfigError("coin must lie in [0, 1)");
  if (!(config.inpainting_probability >= 0.0 && config.inpainting_probability <= 1.0)) {
    throw ConfigError("inpainting probability must lie in [0, 1]");
  }
  if (clean_batch.size() != steps.size() || clean_batch.size() != noise.size()) {
    throw TensorError("SIM batch fields disagree in length");
  }
  SimBatch batch;
  batch.mode = coin < config.inpainting_probability ? SimMode::kInpainting : SimMode::kNonInpainting;
  for (size_t i = 0; i < clean_batch.size(); ++i) {
    const MotionTensor& x0 = clean_batch[i];
    if (x0.rows() == 0) throw DataError("SIM batch sample has no frames");
    SimSample sample;
    sample.model_input = q_sample(x0, steps[i], noise[i], schedule);
    if (batch.mode == SimMode::kInpainting) {
      RandomMask m = sample_training_mask(x0, skeleton, layout, mask_rng);
      sample.model_input = substitute_observations(sample.model_input, steps[i], m.spec, schedule,
                                                   noise[i], config.observation_noise);
      sample.mask = std::move(m);
    }
    batch.samples.push_back(std::move(sample));
  }
  return batch;
}

}  // namespace trajmotion
