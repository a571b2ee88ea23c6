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

#include "trajmotion/normalizer.h"

#include <cmath>

#include "trajmotion/errors.h"

namespace trajmotion {

Normalizer Normalizer::identity(int channels) {
  Normalizer n;
  n.mean = Eigen::RowVectorXd::Zero(channels);
  n.std = Eigen::RowVectorXd::Ones(channels);
  return n;
}

Normalizer Normalizer::fit(const std::vector<MotionTensor>& samples) {
  if (samples.empty()) throw DataError("cannot fit normalization on an empty set");
  const Eigen::Index c = samples.front().cols();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(c);
  double rows = 0.0;
  for (const auto& s : samples) {
    if (s.cols() != c) throw TensorError("samples disagree on channel count");
    sum += s.colwise().sum();
    rows += static_cast<double>(s.rows());
  }
  Normalizer n;
  n.mean = sum / rows;
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(c);
  for (const auto& s : samples) sq += (s.rowwise() - n.mean).array().square().colwise().sum().matrix();
  n.std = (sq / rows).cwiseSqrt();
  // Channels the data never moves get a tiny divisor, so anything acting in
  // normalized units (sampling noise, guidance steps) barely moves them.
  for (Eigen::Index i = 0; i < c; ++i) {
    if (n.std[i] < 1e-6) n.std[i] = 1e-3;
  }
  return n;
}

MotionTensor Normalizer::normalize(const MotionTensor& x) const {
  if (x.cols() != mean.size()) throw TensorError("normalizer channel mismatch");
  return ((x.rowwise() - mean).array().rowwise() / std.array()).matrix();
}

MotionTensor Normalizer::denormalize(const MotionTensor& x) const {
  if (x.cols() != mean.size()) throw TensorError("normalizer channel mismatch");
  return ((x.array().rowwise() * std.array()).rowwise() + mean.array()).matrix();
}

Normalizer Normalizer::prefix(int channels) const {
  if (channels > this->channels()) throw TensorError("prefix wider than normalizer");
  Normalizer n;
  n.mean = mean.head(channels);
  n.std = std.head(channels);
  n.position_scale = position_scale;
  return n;
}

nlohmann::json Normalizer::to_json() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"std", std::vector<double>(std.data(), std.data() + std.size())},
          {"position_scale", position_scale}};
}

Normalizer Normalizer::from_json(const nlohmann::json& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("std").get<std::vector<double>>();
  if (m.size() != s.size()) throw DataError("normalizer mean/std length mismatch");
  Normalizer n;
  n.mean = Eigen::Map<const Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  n.std = Eigen::Map<const Eigen::RowVectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  n.position_scale = j.value("position_scale", 1.0);
  return n;
}

}  // namespace trajmotion
