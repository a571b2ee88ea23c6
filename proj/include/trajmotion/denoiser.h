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

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajmotion/nn.h"
#include "trajmotion/representation.h"

namespace trajmotion {

enum class Stage { kTrajectoryControl, kMotionCompletion };

const char* to_string(Stage stage);
Stage stage_from_string(const std::string& name);

struct DenoiserConfig {
  int layers = 2;
  int width = 64;
  int heads = 4;
  int max_frames = 64;
  int channel_count = 25;
  int text_embed_dim = 32;
  Stage stage = Stage::kTrajectoryControl;
  std::uint64_t init_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static DenoiserConfig from_json(const nlohmann::json& j);
};

// One batch of denoiser inputs. `trajectory` is empty for stage 2, and may
// hold empty matrices for stage-1 samples without a trajectory.
struct DenoiserBatch {
  std::vector<MotionTensor> x_t;
  std::vector<int> t;
  std::vector<Eigen::VectorXd> text;
  std::vector<Eigen::MatrixXd> trajectory;  // frames x kTrajectoryFeatureWidth
};

// Transformer encoder over per-frame motion tokens that predicts the clean
// sample. A condition token (timestep + text) is prepended to the sequence;
// stage-1 trajectory features pass through a three-layer MLP and are added
// to the motion tokens frame by frame.
class Denoiser {
 public:
  struct Cache;

  explicit Denoiser(const DenoiserConfig& config);
  ~Denoiser();
  Denoiser(const Denoiser& other);
  Denoiser& operator=(const Denoiser& other);
  Denoiser(Denoiser&&) noexcept;
  Denoiser& operator=(Denoiser&&) noexcept;

  const DenoiserConfig& config() const { return config_; }

  std::vector<MotionTensor> predict(const DenoiserBatch& batch) const;
  MotionTensor predict_x0(const MotionTensor& x_t, int t, const Eigen::VectorXd& text,
                          const Eigen::MatrixXd* trajectory = nullptr) const;

  // Training path: forward with activations kept, then accumulate parameter
  // gradients from d(loss)/d(output) per sample.
  std::vector<MotionTensor> forward(const DenoiserBatch& batch, Cache& cache) const;
  void backward(const Cache& cache, const std::vector<MotionTensor>& grad_out);

  // Stable order; names are unique.
  nn::ParameterList parameters();
  std::vector<const nn::Parameter*> parameters() const;
  long parameter_count() const;

 private:
  void check_batch(const DenoiserBatch& batch) const;
  std::vector<MotionTensor> run(const DenoiserBatch& batch, Cache* cache) const;

  DenoiserConfig config_;
  struct Layers;
  std::unique_ptr<Layers> layers_;
};

struct Denoiser::Cache {
  int batch = 0;
  int frames = 0;
  nn::Linear::Cache input;
  nn::Linear::Cache traj1, traj2, traj3;
  nn::Mat traj1_out, traj2_out;
  nn::Linear::Cache time1, time2;
  nn::Mat time1_out;
  nn::Linear::Cache text;
  std::vector<nn::EncoderBlock::Cache> blocks;
  nn::LayerNorm::Cache final_norm;
  nn::Linear::Cache output;
};

// Named-tensor archive: magic line, JSON header (caller metadata plus tensor
// names and shapes), then raw little-endian doubles in column-major order.
void save_tensor_archive(const std::string& path, nlohmann::json header,
                         const std::vector<const nn::Parameter*>& tensors);
nlohmann::json load_tensor_archive(const std::string& path, const nn::ParameterList& tensors);
nlohmann::json read_archive_header(const std::string& path);

}  // namespace trajmotion
