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

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajmotion/diffusion.h"
#include "trajmotion/representation.h"

namespace trajmotion {

// Binary (frame, channel) mask over a motion layout together with the values
// observed under it. Entries outside the mask hold zero.
struct MaskSpec {
  Eigen::MatrixXd mask;
  MotionTensor observed;

  int frames() const { return static_cast<int>(mask.rows()); }
  int channels() const { return static_cast<int>(mask.cols()); }
  long popcount() const { return static_cast<long>((mask.array() != 0.0).count()); }
  bool empty() const { return popcount() == 0; }
  void validate() const;

  // Joint names and frame lists, for keyframe-control input files:
  // {"layout": ..., "frames": F, "joints": {"left_wrist": [0, 5, ...]},
  //  "root_frames": [...]}. Observed values are not serialized.
  nlohmann::json to_json(const Skeleton& skeleton, RepresentationKind kind) const;
};

// Observes the root channels on every frame and the local positions of
// `joints` (pelvis contributes no j_p channel) on `frames`. Values are copied
// from `source`, any representation sharing the layout's column prefix.
// Joints must be among the controllable joints unless `allow_any_joint`.
// Throws ConfigError for an empty joint set.
MaskSpec build_observation_mask(const MotionTensor& source, const Skeleton& skeleton,
                                const ChannelLayout& layout, const std::vector<int>& joints,
                                const std::vector<int>& frames, bool allow_any_joint = false);

enum class ObservationNoise {
  kNoised,  // masked entries <- q_sample(observed, t, eps) for t >= 1
  kClean,   // masked entries <- observed at every step
};

const char* to_string(ObservationNoise mode);
ObservationNoise observation_noise_from_string(const std::string& name);

// Writes observations into x_t under the mask. For t == 0 the clean values
// are copied exactly regardless of mode.
MotionTensor substitute_observations(const MotionTensor& x_t, int t, const MaskSpec& spec,
                                     const NoiseSchedule& schedule, const MotionTensor& eps,
                                     ObservationNoise mode = ObservationNoise::kNoised);

enum class SimMode { kInpainting, kNonInpainting };

struct SimConfig {
  double inpainting_probability = 0.5;
  ObservationNoise observation_noise = ObservationNoise::kClean;
};

// Random training mask: 1..6 controllable joints and a contiguous span of
// 1..F frames; root channels and joint positions are observed on the span.
struct RandomMask {
  std::vector<int> joints;
  int first_frame = 0;
  int frame_count = 0;
  MaskSpec spec;
};

RandomMask sample_training_mask(const MotionTensor& clean, const Skeleton& skeleton,
                                const ChannelLayout& layout, Rng& rng);

struct SimSample {
  MotionTensor model_input;
  std::optional<RandomMask> mask;
};

struct SimBatch {
  SimMode mode = SimMode::kNonInpainting;
  std::vector<SimSample> samples;
};

// Builds the noised model inputs for one stage-2 training batch. `coin`
// in [0, 1) selects the mode for the whole batch: inpainting when
// coin < inpainting_probability.
SimBatch sim_prepare_batch(const std::vector<MotionTensor>& clean_batch,
                           const std::vector<int>& steps,
                           const std::vector<MotionTensor>& noise, double coin,
                           const Skeleton& skeleton, const ChannelLayout& layout,
                           const NoiseSchedule& schedule, const SimConfig& config, Rng& mask_rng);

}  // namespace trajmotion
