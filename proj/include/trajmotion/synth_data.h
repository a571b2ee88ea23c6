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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajmotion/normalizer.h"
#include "trajmotion/representation.h"

namespace trajmotion {

enum class MotionFamily {
  kWalkLine,
  kWalkCircle,
  kWalkAndRaiseHand,
  kStandWave,
  kJumpForward,
  kSitDown,
};

inline constexpr int kMotionFamilyCount = 6;

const char* to_string(MotionFamily family);
MotionFamily family_from_string(const std::string& name);

struct FamilyParams {
  int frames = 32;
  double speed = 0.04;      // m/frame, walking families and jump flight
  double radius = 2.0;      // m, walk_circle
  int turn = 1;             // +1 turns left, -1 turns right
  int hand = 0;             // 0 left, 1 right
  double phase = 0.0;       // gait phase offset, rad
  double cadence = 0.35;    // gait phase advance, rad/frame
  double amplitude = 1.0;   // scales limb motion

  // Throws DataError when a value lies outside its family's range.
  void validate(MotionFamily family) const;
  nlohmann::json to_json() const;
  static FamilyParams from_json(const nlohmann::json& j);
};

struct DatasetSample {
  int id = 0;
  Motion motion = Motion::zeros(ChannelLayout::redundant(8), 1);  // redundant layout
  std::string prompt;
  MotionFamily family = MotionFamily::kWalkLine;
  FamilyParams params;
  std::uint64_t seed = 0;
};

// Closed vocabulary of every word the prompt templates can produce.
std::vector<std::string> prompt_vocabulary();

// Deterministic in (family, params, seed). The seed only perturbs secondary
// details (pose jitter); the root path follows the params exactly.
DatasetSample generate_sample(MotionFamily family, const FamilyParams& params,
                              std::uint64_t seed, const Skeleton& skeleton = Skeleton::toy());

// Draws family-appropriate params for sample `index` from a seeded stream.
FamilyParams random_params(MotionFamily family, int frames, std::uint64_t seed);

struct Dataset {
  int frames = 32;
  int fps = 20;
  std::uint64_t split_seed = 0;
  Skeleton skeleton = Skeleton::toy();
  std::vector<DatasetSample> train;
  std::vector<DatasetSample> test;
  Normalizer normalizer;  // redundant layout, fitted on train only

  std::vector<MotionTensor> train_tensors() const;
};

// Families cycle so every family gets size/6 samples (+1 for the first
// size % 6). 80/20 split after a seeded shuffle.
Dataset build_dataset(int size, std::uint64_t split_seed, int frames = 32,
                      double train_fraction = 0.8);

// Directory layout: manifest.json (normalization, split, per-sample
// metadata) plus motions/<id>.json.
void save_dataset(const Dataset& dataset, const std::string& directory);
Dataset load_dataset(const std::string& directory);

}  // namespace trajmotion
