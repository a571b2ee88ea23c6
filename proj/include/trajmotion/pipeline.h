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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajmotion/guidance.h"
#include "trajmotion/inpainting.h"
#include "trajmotion/metrics.h"
#include "trajmotion/representation.h"
#include "trajmotion/synth_data.h"
#include "trajmotion/training.h"
#include "trajmotion/trajectory.h"

namespace trajmotion {

enum class Sampler { kDdpm, kDdim };
const char* to_string(Sampler sampler);
Sampler sampler_from_string(const std::string& name);

enum class Ablation {
  kNone,
  kPassAllJoints,     // every stage-1 joint is observed in stage 2
  kPassTorsoJoints,   // controlled joints plus pelvis and head
  kSingleStage,       // one guided diffusion over the redundant representation
  kRedundantStage1,   // stage 1 runs on the redundant representation
};
const char* to_string(Ablation ablation);
Ablation ablation_from_string(const std::string& name);

struct GuidanceConfig {
  bool enabled = true;
  GuidanceOptimizer optimizer = GuidanceOptimizer::kLbfgs;
  // SGD runs a flat schedule; L-BFGS uses the coarse-to-fine schedule.
  int sgd_iterations = 10;
  double sgd_learning_rate = 0.5;

  GuidanceSchedule schedule_for(int total_steps) const;
};

struct TrajectorySampleOptions {
  Sampler sampler = Sampler::kDdpm;
  int ddim_steps = 0;  // 0 means every step
  GuidanceConfig guidance;
};

struct TrajectorySample {
  MotionTensor motion;  // physical units, the checkpoint's layout
  ErrorTrace trace;
};

// Guided stage-1 sampling. The trace records, per step, the control error of
// the network's x0 estimate and of the guided sample (the refined posterior
// mean for DDPM, the guided DDIM iterate for DDIM).
TrajectorySample sample_trajectory_control(const Checkpoint& checkpoint,
                                           const Eigen::VectorXd& text,
                                           const TrajectorySpec& spec, const Skeleton& skeleton,
                                           const TrajectorySampleOptions& options,
                                           std::uint64_t seed);

struct CompletionOptions {
  Sampler sampler = Sampler::kDdpm;
  int ddim_steps = 0;
  ObservationNoise observation_noise = ObservationNoise::kClean;
};

// Text-conditioned stage-2 sampling. `observations` holds physical values in
// the redundant layout; nullptr gives plain text-to-motion generation. The
// masked channels of the result equal the observations exactly.
MotionTensor sample_motion_completion(const Checkpoint& checkpoint, const Eigen::VectorXd& text,
                                      const MaskSpec* observations, int frames,
                                      const CompletionOptions& options, std::uint64_t seed);

struct GenerationRequest {
  std::string prompt;
  TrajectorySpec trajectory;
  Sampler sampler = Sampler::kDdpm;
  int ddim_steps_s1 = 0;
  int ddim_steps_s2 = 0;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kNone;
  GuidanceConfig guidance;
  bool stage1_text = true;
  ObservationNoise observation_noise = ObservationNoise::kClean;
};

struct SampleMetrics {
  double avg_err_cm = 0.0;
  double loc_err_pct = 0.0;
  bool trajectory_failed = false;
  double foot_skating_ratio = 0.0;
};

struct GenerationResult {
  Motion motion = Motion::zeros(ChannelLayout::redundant(8), 1);  // physical units
  GlobalMotion world;
  ErrorTrace trace;
  MotionTensor stage1;  // stage-1 output, its own layout
  MaskSpec observations;  // what stage 2 received (empty for single_stage)
  std::optional<SampleMetrics> metrics;  // when the request has constraints
};

// Joints whose stage-1 channels stage 2 observes for a request.
std::vector<int> passed_joints(const TrajectorySpec& spec, Ablation ablation,
                               const Skeleton& skeleton);

// `stage2` may be null only for the single_stage ablation.
GenerationResult generate(const GenerationRequest& request, const Checkpoint& stage1,
                          const Checkpoint* stage2, const Skeleton& skeleton = Skeleton::toy());

MaskSpec ground_truth_observations(const Motion& reference, const std::vector<int>& joints,
                                   const Skeleton& skeleton);

struct ControlConfig {
  std::string label = "pelvis";
  std::vector<int> joints{0};
  double density = 1.0;  // fraction of frames constrained, evenly spaced
};

// Evenly spaced keyframes; density 1 gives every frame, tiny densities give
// one frame in the middle.
std::vector<int> control_frames(int frames, double density);

// Pelvis, each end effector alone, all six, and a sparse all-joint setting.
std::vector<ControlConfig> standard_control_configs(const Skeleton& skeleton);

enum class EvalMode {
  kTwoStage,                 // full pipeline (honours the request ablation)
  kTextOnly,                 // unguided text-to-motion with the stage-2 model
  kGroundTruthObservations,  // stage 2 observing the reference motion
  kOracle,                   // returns the reference motion
};

struct EvaluationOptions {
  EvalMode mode = EvalMode::kTwoStage;
  GenerationRequest request;  // sampler, steps, ablation, guidance, seed
  int max_samples = 0;        // 0 uses the whole split
  int diversity_subset = 50;
  int pool = 32;
};

MetricsReport evaluate(const Dataset& dataset, const std::vector<DatasetSample>& split,
                       const Checkpoint* stage1, const Checkpoint* stage2,
                       const ControlConfig& control, const EvaluationOptions& options,
                       std::vector<GenerationResult>* results = nullptr);

struct InstrumentConfig {
  GuidanceOptimizer optimizer = GuidanceOptimizer::kSgd;
  bool use_text = true;
  int samples = 50;
  ControlConfig control;
  std::uint64_t seed = 0;
};

// Per-step control-error traces of stage-1 sampling over test samples.
std::vector<ErrorTrace> instrument(const Checkpoint& stage1, const Dataset& dataset,
                                   const InstrumentConfig& config);

}  // namespace trajmotion
