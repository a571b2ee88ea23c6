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

#include "trajmotion/denoiser.h"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "trajmotion/errors.h"
#include "trajmotion/trajectory.h"

namespace trajmotion {

const char* to_string(Stage stage) {
  return stage == Stage::kTrajectoryControl ? "trajectory_control" : "motion_completion";
}

Stage stage_from_string(const std::string& name) {
  if (name == "trajectory_control") return Stage::kTrajectoryControl;
  if (name == "motion_completion") return Stage::kMotionCompletion;
  throw ConfigError("unknown stage '" + name + "'");
}

void DenoiserConfig::validate() const {
  if (layers < 1 || width < 2 || heads < 1 || max_frames < 1 || channel_count < 1 ||
      text_embed_dim < 1) {
    throw ConfigError("denoiser dimensions must be positive");
  }
  if (width % heads != 0) throw ConfigError("width must be divisible by heads");
}

nlohmann::json DenoiserConfig::to_json() const {
  return {{"layers", layers},
          {"width", width},
          {"heads", heads},
          {"max_frames", max_frames},
          {"channel_count", channel_count},
          {"text_embed_dim", text_embed_dim},
          {"stage", to_string(stage)},
          {"init_seed", init_seed}};
}

DenoiserConfig DenoiserConfig::from_json(const nlohmann::json& j) {
  DenoiserConfig c;
  c.layers = j.value("layers", c.layers);
  c.width = j.value("width", c.width);
  c.heads = j.value("heads", c.heads);
  c.max_frames = j.value("max_frames", c.max_frames);
  c.channel_count = j.value("channel_count", c.channel_count);
  c.text_embed_dim = j.value("text_embed_dim", c.text_embed_dim);
  c.stage = stage_from_string(j.value("stage", std::string(to_string(c.stage))));
  c.init_seed = j.value("init_seed", c.init_seed);
  c.validate();
  return c;
}

struct Denoiser::Layers {
  nn::Linear input;
  nn::Linear traj1, traj2, traj3;
  nn::Linear time1, time2;
  nn::Linear text;
  std::vector<nn::EncoderBlock> blocks;
  nn::LayerNorm final_norm;
  nn::Linear output;
  nn::Mat positional;  // (max_frames + 1) x width

  void collect(nn::ParameterList& out, bool with_trajectory) {
    input.collect(out);
    if (with_trajectory) {
      traj1.collect(out);
      traj2.collect(out);
      traj3.collect(out);
    }
    time1.collect(out);
    time2.collect(out);
    text.collect(out);
    for (auto& b : blocks) b.collect(out);
    final_norm.collect(out);
    output.collect(out);
  }
};

Denoiser::Denoiser(const DenoiserConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.init_seed);
  layers_ = std::make_unique<Layers>();
  const int w = config_.width;
  layers_->input = nn::Linear("input", config_.channel_count, w, rng);
  if (config_.stage == Stage::kTrajectoryControl) {
    layers_->traj1 = nn::Linear("traj.0", kTrajectoryFeatureWidth, w, rng);
    layers_->traj2 = nn::Linear("traj.1", w, w, rng);
    layers_->traj3 = nn::Linear("traj.2", w, w, rng);
  }
  layers_->time1 = nn::Linear("time.0", w, w, rng);
  layers_->time2 = nn::Linear("time.1", w, w, rng);
  layers_->text = nn::Linear("text", config_.text_embed_dim, w, rng);
  for (int i = 0; i < config_.layers; ++i) {
    layers_->blocks.emplace_back("block" + std::to_string(i), w, config_.heads, 2 * w, rng);
  }
  layers_->final_norm = nn::LayerNorm("final_norm", w);
  layers_->output = nn::Linear("output", w, config_.channel_count, rng);
  Eigen::VectorXd pos = Eigen::VectorXd::LinSpaced(config_.max_frames + 1, 0.0, config_.max_frames);
  layers_->positional = nn::sinusoidal_embedding(pos, w);
}

Denoiser::~Denoiser() = default;
Denoiser::Denoiser(const Denoiser& other)
    : config_(other.config_), layers_(std::make_unique<Layers>(*other.layers_)) {}
Denoiser& Denoiser::operator=(const Denoiser& other) {
  if (this != &other) {
    config_ = other.config_;
    layers_ = std::make_unique<Layers>(*other.layers_);
  }
  return *this;
}
Denoiser::Denoiser(Denoiser&&) noexcept = default;
Denoiser& Denoiser::operator=(Denoiser&&) noexcept = default;

nn::ParameterList Denoiser::parameters() {
  nn::ParameterList out;
  layers_->collect(out, config_.stage == Stage::kTrajectoryControl);
  return out;
}

std::vector<const nn::Parameter*> Denoiser::parameters() const {
  nn::ParameterList mut;
  layers_->collect(mut, config_.stage == Stage::kTrajectoryControl);
  return {mut.begin(), mut.end()};
}

long Denoiser::parameter_count() const {
  long n = 0;
  for (const auto* p : parameters()) n += static_cast<long>(p->value.size());
  return n;
}

void Denoiser::check_batch(const DenoiserBatch& batch) const {
  const size_t b = batch.x_t.size();
  if (b == 0) throw TensorError("empty denoiser batch");
  if (batch.t.size() != b || batch.text.size() != b) {
    throw TensorError("denoiser batch fields disagree in length");
  }
  const bool stage1 = config_.stage == Stage::kTrajectoryControl;
  if (!stage1 && !batch.trajectory.empty()) {
    throw ConfigError("the motion completion denoiser takes no trajectory condition");
  }
  if (stage1 && !batch.trajectory.empty() && batch.trajectory.size() != b) {
    throw TensorError("trajectory batch length mismatch");
  }
  const Eigen::Index frames = batch.x_t.front().rows();
  for (size_t i = 0; i < b; ++i) {
    const auto& x = batch.x_t[i];
    if (x.cols() != config_.channel_count) {
      throw ConfigError("denoiser expects " + std::to_string(config_.channel_count) +
                        " channels for stage " + to_string(config_.stage) + ", got " +
                        std::to_string(x.cols()));
    }
    if (x.rows() != frames) throw TensorError("batch samples must share a frame count");
    if (batch.text[i].size() != config_.text_embed_dim) {
      throw TensorError("text embedding dimension mismatch");
    }
    if (stage1 && !batch.trajectory.empty() && batch.trajectory[i].size() != 0 &&
        (batch.trajectory[i].rows() != frames ||
         batch.trajectory[i].cols() != kTrajectoryFeatureWidth)) {
      throw TensorError("trajectory features have the wrong shape");
    }
  }
  if (frames < 1 || frames > config_.max_frames) {
    throw TensorError("frame count outside [1, max_frames]");
  }
}

std::vector<MotionTensor> Denoiser::run(const DenoiserBatch& batch, Cache* cache) const {
  check_batch(batch);
  const int b = static_cast<int>(batch.x_t.size());
  const int frames = static_cast<int>(batch.x_t.front().rows());
  const int seq = frames + 1;
  const int w = config_.width;
  const int c = config_.channel_count;
  Layers& L = *layers_;

  nn::Mat motion_in(b * frames, c);
  for (int i = 0; i < b; ++i) motion_in.middleRows(i * frames, frames) = batch.x_t[i];
  nn::Mat motion_tokens = L.input.forward(motion_in, cache ? &cache->input : nullptr);

  if (config_.stage == Stage::kTrajectoryControl) {
    nn::Mat traj_in = nn::Mat::Zero(b * frames, kTrajectoryFeatureWidth);
    for (int i = 0; i < b && !batch.trajectory.empty(); ++i) {
      if (batch.trajectory[i].size() != 0) {
        traj_in.middleRows(i * frames, frames) = batch.trajectory[i];
      }
    }
    nn::Mat h1 = L.traj1.forward(traj_in, cache ? &cache->traj1 : nullptr);
    nn::Mat h2 = L.traj2.forward(nn::silu(h1), cache ? &cache->traj2 : nullptr);
    nn::Mat h3 = L.traj3.forward(nn::silu(h2), cache ? &cache->traj3 : nullptr);
    motion_tokens += h3;
    if (cache) {
      cache->traj1_out = std::move(h1);
      cache->traj2_out = std::move(h2);
    }
  }

  Eigen::VectorXd steps(b);
  nn::Mat text_in(b, config_.text_embed_dim);
  for (int i = 0; i < b; ++i) {
    steps[i] = batch.t[i];
    text_in.row(i) = batch.text[i].transpose();
  }
  nn::Mat t1 = L.time1.forward(nn::sinusoidal_embedding(steps, w), cache ? &cache->time1 : nullptr);
  nn::Mat cond = L.time2.forward(nn::silu(t1), cache ? &cache->time2 : nullptr);
  cond += L.text.forward(text_in, cache ? &cache->text : nullptr);
  if (cache) cache->time1_out = std::move(t1);

  nn::Mat tokens(b * seq, w);
  for (int i = 0; i < b; ++i) {
    tokens.row(i * seq) = cond.row(i) + L.positional.row(0);
    tokens.middleRows(i * seq + 1, frames) =
        motion_tokens.middleRows(i * frames, frames) + L.positional.middleRows(1, frames);
  }

  if (cache) {
    cache->batch = b;
    cache->frames = frames;
    cache->blocks.resize(L.blocks.size());
  }
  for (size_t k = 0; k < L.blocks.size(); ++k) {
    tokens = L.blocks[k].forward(tokens, b, seq, cache ? &cache->blocks[k] : nullptr);
  }
  tokens = L.final_norm.forward(tokens, cache ? &cache->final_norm : nullptr);

  nn::Mat motion_out(b * frames, w);
  for (int i = 0; i < b; ++i) {
    motion_out.middleRows(i * frames, frames) = tokens.middleRows(i * seq + 1, frames);
  }
  nn::Mat y = L.output.forward(motion_out, cache ? &cache->output : nullptr);
  std::vector<MotionTensor> out(b);
  for (int i = 0; i < b; ++i) out[i] = y.middleRows(i * frames, frames);
  return out;
}

std::vector<MotionTensor> Denoiser::predict(const DenoiserBatch& batch) const {
  return run(batch, nullptr);
}

MotionTensor Denoiser::predict_x0(const MotionTensor& x_t, int t, const Eigen::VectorXd& text,
                                  const Eigen::MatrixXd* trajectory) const {
  DenoiserBatch batch;
  batch.x_t.push_back(x_t);
  batch.t.push_back(t);
  batch.text.push_back(text);
  if (trajectory) {
    if (config_.stage != Stage::kTrajectoryControl) {
      throw ConfigError("the motion completion denoiser takes no trajectory condition");
    }
    batch.trajectory.push_back(*trajectory);
  }
  return run(batch, nullptr).front();
}

std::vector<MotionTensor> Denoiser::forward(const DenoiserBatch& batch, Cache& cache) const {
  return run(batch, &cache);
}

void Denoiser::backward(const Cache& cache, const std::vector<MotionTensor>& grad_out) {
  const int b = cache.batch;
  const int frames = cache.frames;
  const int seq = frames + 1;
  const int w = config_.width;
  Layers& L = *layers_;
  if (static_cast<int>(grad_out.size()) != b) throw TensorError("gradient batch mismatch");

  nn::Mat dy(b * frames, config_.channel_count);
  for (int i = 0; i < b; ++i) dy.middleRows(i * frames, frames) = grad_out[i];
  nn::Mat d_motion_out = L.output.backward(cache.output, dy);

  nn::Mat d_tokens = nn::Mat::Zero(b * seq, w);
  for (int i = 0; i < b; ++i) {
    d_tokens.middleRows(i * seq + 1, frames) = d_motion_out.middleRows(i * frames, frames);
  }
  d_tokens = L.final_norm.backward(cache.final_norm, d_tokens);
  for (size_t k = L.blocks.size(); k-- > 0;) {
    d_tokens = L.blocks[k].backward(cache.blocks[k], b, seq, d_tokens);
  }

  nn::Mat d_cond(b, w);
  nn::Mat d_motion_tokens(b * frames, w);
  for (int i = 0; i < b; ++i) {
    d_cond.row(i) = d_tokens.row(i * seq);
    d_motion_tokens.middleRows(i * frames, frames) = d_tokens.middleRows(i * seq + 1, frames);
  }
  L.text.backward(cache.text, d_cond);
  L.time1.backward(cache.time1,
                   nn::silu_backward(cache.time1_out, L.time2.backward(cache.time2, d_cond)));

  if (config_.stage == Stage::kTrajectoryControl) {
    nn::Mat d2 = nn::silu_backward(cache.traj2_out, L.traj3.backward(cache.traj3, d_motion_tokens));
    nn::Mat d1 = nn::silu_backward(cache.traj1_out, L.traj2.backward(cache.traj2, d2));
    L.traj1.backward(cache.traj1, d1);
  }
  L.input.backward(cache.input, d_motion_tokens);
}

namespace {
constexpr char kArchiveMagic[] = "TRAJMOTION-ARCHIVE-1\n";
}

void save_tensor_archive(const std::string& path, nlohmann::json header,
                         const std::vector<const nn::Parameter*>& tensors) {
  nlohmann::json index = nlohmann::json::array();
  for (const auto* p : tensors) {
    index.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  header["tensors"] = index;
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write archive '" + path + "'");
  out.write(kArchiveMagic, sizeof(kArchiveMagic) - 1);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : tensors) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!out) throw ConfigError("failed writing archive '" + path + "'");
}

namespace {

nlohmann::json read_header(std::ifstream& in, const std::string& path) {
  std::string magic(sizeof(kArchiveMagic) - 1, '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kArchiveMagic) throw ConfigError("'" + path + "' is not a tensor archive");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ConfigError("truncated archive '" + path + "'");
  return nlohmann::json::parse(text);
}

}  // namespace

nlohmann::json read_archive_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open archive '" + path + "'");
  return read_header(in, path);
}

nlohmann::json load_tensor_archive(const std::string& path, const nn::ParameterList& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open archive '" + path + "'");
  nlohmann::json header = read_header(in, path);
  const auto& index = header.at("tensors");
  if (index.size() != tensors.size()) throw ConfigError("archive tensor count mismatch");
  for (size_t i = 0; i < tensors.size(); ++i) {
    nn::Parameter& p = *tensors[i];
    if (index[i].at("name").get<std::string>() != p.name ||
        index[i].at("rows").get<Eigen::Index>() != p.value.rows() ||
        index[i].at("cols").get<Eigen::Index>() != p.value.cols()) {
      throw ConfigError("archive tensor '" + index[i].at("name").get<std::string>() +
                        "' does not match the model");
    }
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(sizeof(double) * p.value.size()));
  }
  if (!in) throw ConfigError("truncated archive '" + path + "'");
  return header;
}

}  // namespace trajmotion
