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

#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "trajmotion/representation.h"

namespace trajmotion {

// Per-channel affine normalization of motion tensors, plus a single scale
// for world-frame trajectory targets. Channels with (near) zero spread get
// std = 1e-3 and normalize to a constant.
struct Normalizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;
  double position_scale = 1.0;  // meters per normalized trajectory unit

  static Normalizer identity(int channels);
  static Normalizer fit(const std::vector<MotionTensor>& samples);

  int channels() const { return static_cast<int>(mean.size()); }
  MotionTensor normalize(const MotionTensor& x) const;
  MotionTensor denormalize(const MotionTensor& x) const;
  // Restricts to the first `channels` columns (representations share prefixes).
  Normalizer prefix(int channels) const;

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& j);
};

}  // namespace trajmotion
