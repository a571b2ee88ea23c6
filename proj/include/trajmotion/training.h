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
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajmotion/denoiser.h"
#include "trajmotion/diffusion.h"
#include "trajmotion/inpainting.h"
#include "trajmotion/normalizer.h"
#include "trajmotion/representation.h"
#include "trajmotion/synth_data.h"
#include "trajmotion/text.h"
#include "trajmotion/trajectory.h"

namespace trajmotion {

double loss_elem(const MotionTensor& x0, const MotionTensor& x0_hat,
                 MotionTensor* grad = nullptr);

// Mean over masked joint-frames of the squared world-position error. Warns on
// stderr and returns 0 for an empty mask.
double loss_global(const MotionTensor& x0_hat, const TrajectorySpec& spec,
                   const Skeleton& skeleton, MotionTensor* grad = nullptr);

double total_loss(const MotionTensor& x0, const MotionTensor& x0_hat, const TrajectorySpec& spec,
                  const Skeleton& skeleton, MotionTensor* grad = nullptr);

struct TrainConfig {
  int iterations = 20000;
  double lr_initial = 2e-4;
  int lr_drop_at = 10000;
  double lr_final = 1e-5;
  int batch_size = 16;
  int diffusion_steps = 100;
  std::uint64_t seed = 0;
  int stage = 1;
  RepresentationKind representation = RepresentationKind::kSimplified;  // stage 1 only
  double inpainting_probability = 0.5;  // stage 2; 1.0 trains without SIM
  double text_dropout = 0.1;
  double clip_norm = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct LossRecord {
  int iteration = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
  double loss_elem = 0.0;
  double loss_global = 0.0;
};

struct Checkpoint {
  DenoiserConfig model_config;
  TrainConfig train_config;
  RepresentationKind representation = RepresentationKind::kSimplified;
  ScheduleConfig schedule;
  Normalizer normalizer;  // restricted to the representation's channels
  Denoiser model;
  std::vector<LossRecord> history;

  explicit Checkpoint(const DenoiserConfig& config) : model_config(config), model(config) {}
  NoiseSchedule noise_schedule() const { return NoiseSchedule::from_config(schedule); }
};

TextEncoder dataset_text_encoder(int embed_dim);

// Model config matching a train config and dataset (channel count, stage).
DenoiserConfig default_model_config(const TrainConfig& config, const Dataset& dataset);

using TrainProgress = std::function<void(const LossRecord&)>;

Checkpoint train_stage(const TrainConfig& config, const Dataset& dataset, Denoiser model,
                       const TrainProgress& progress = {});

// Directory layout: checkpoint.json (configs, normalizer), weights.bin
// (tensor archive), loss.csv.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& directory);
Checkpoint load_checkpoint(const std::string& directory);

// Exponential moving average of the loss column.
std::vector<double> smoothed_losses(const std::vector<LossRecord>& history, double decay = 0.98);

}  // namespace trajmotion
