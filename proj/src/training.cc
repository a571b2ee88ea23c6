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

#include "trajmotion/training.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "trajmotion/errors.h"
#include "trajmotion/guidance.h"
#include "trajmotion/io.h"

namespace trajmotion {

double loss_elem(const MotionTensor& x0, const MotionTensor& x0_hat, MotionTensor* grad) {
  if (x0.rows() != x0_hat.rows() || x0.cols() != x0_hat.cols()) {
    throw TensorError("loss_elem: shape mismatch");
  }
  const double n = static_cast<double>(x0.size());
  if (n == 0) throw TensorError("loss_elem: empty tensor");
  const MotionTensor diff = x0_hat - x0;
  if (grad) *grad = (2.0 / n) * diff;
  return diff.squaredNorm() / n;
}

namespace {

double global_loss_quiet(const MotionTensor& x0_hat, const TrajectorySpec& spec, int joint_count,
                         MotionTensor* grad) {
  if (!spec.has_constraints()) {
    if (grad) grad->setZero(x0_hat.rows(), x0_hat.cols());
    return 0.0;
  }
  return control_objective(x0_hat, spec, joint_count, grad);
}

}  // namespace

double loss_global(const MotionTensor& x0_hat, const TrajectorySpec& spec,
                   const Skeleton& skeleton, MotionTensor* grad) {
  if (!spec.has_constraints()) {
    std::cerr << "loss_global: empty trajectory mask, returning 0\n";
  }
  return global_loss_quiet(x0_hat, spec, skeleton.joint_count(), grad);
}

double total_loss(const MotionTensor& x0, const MotionTensor& x0_hat, const TrajectorySpec& spec,
                  const Skeleton& skeleton, MotionTensor* grad) {
  MotionTensor g_elem, g_global;
  const double elem = loss_elem(x0, x0_hat, grad ? &g_elem : nullptr);
  const double global = loss_global(x0_hat, spec, skeleton, grad ? &g_global : nullptr);
  if (grad) *grad = g_elem + g_global;
  return elem + global;
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be nonnegative");
  if (!(lr_initial > 0.0) || !(lr_final > 0.0)) throw ConfigError("learning rates must be positive");
  if (lr_drop_at <= 0 || (iterations > 0 && lr_drop_at >= iterations)) {
    throw ConfigError("lr_drop_at must lie in (0, iterations)");
  }
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (diffusion_steps <= 0) throw ConfigError("diffusion_steps must be positive");
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (!(inpainting_probability >= 0.0 && inpainting_probability <= 1.0)) {
    throw ConfigError("inpainting_probability must lie in [0, 1]");
  }
  if (!(text_dropout >= 0.0 && text_dropout < 1.0)) {
    throw ConfigError("text_dropout must lie in [0, 1)");
  }
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"iterations", iterations},
          {"lr_initial", lr_initial},
          {"lr_drop_at", lr_drop_at},
          {"lr_final", lr_final},
          {"batch_size", batch_size},
          {"diffusion_steps", diffusion_steps},
          {"seed", seed},
          {"stage", stage},
          {"representation", to_string(representation)},
          {"inpainting_probability", inpainting_probability},
          {"text_dropout", text_dropout},
          {"clip_norm", clip_norm}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "iterations") c.iterations = value.get<int>();
      else if (key == "lr_initial") c.lr_initial = value.get<double>();
      else if (key == "lr_drop_at") c.lr_drop_at = value.get<int>();
      else if (key == "lr_final") c.lr_final = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "diffusion_steps") c.diffusion_steps = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "stage") c.stage = value.get<int>();
      else if (key == "representation") c.representation = representation_from_string(value.get<std::string>());
      else if (key == "inpainting_probability") c.inpainting_probability = value.get<double>();
      else if (key == "text_dropout") c.text_dropout = value.get<double>();
      else if (key == "clip_norm") c.clip_norm = value.get<double>();
      else throw ConfigError("unknown train config field '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("train config field '" + key + "': " + e.what());
    }
  }
  return c;
}

TextEncoder dataset_text_encoder(int embed_dim) {
  return TextEncoder(prompt_vocabulary(), embed_dim);
}

DenoiserConfig default_model_config(const TrainConfig& config, const Dataset& dataset) {
  DenoiserConfig m;
  const int joints = dataset.skeleton.joint_count();
  if (config.stage == 1) {
    m.stage = Stage::kTrajectoryControl;
    m.channel_count = ChannelLayout(config.representation, joints).width();
  } else {
    m.stage = Stage::kMotionCompletion;
    m.channel_count = ChannelLayout::redundant(joints).width();
  }
  m.max_frames = std::max(m.max_frames, dataset.frames);
  m.init_seed = config.seed;
  return m;
}

namespace {

struct PreparedSample {
  MotionTensor clean;  // normalized, representation channels
  GlobalMotion world;
  Eigen::VectorXd text;
};

// Random joint subset of the controllable joints, on either a contiguous
// span or a sparse keyframe set.
TrajectorySpec sample_condition(const PreparedSample& s, const Skeleton& skeleton, Rng& rng) {
  const int frames = s.world.frames();
  std::vector<int> pool(skeleton.controllable_joints.begin(), skeleton.controllable_joints.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  const int count = std::uniform_int_distribution<int>(1, kControllableJointCount)(rng);
  std::vector<int> joints(pool.begin(), pool.begin() + count);
  std::sort(joints.begin(), joints.end());

  std::vector<int> keyframes;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < 0.5) {
    const int length = std::uniform_int_distribution<int>(1, frames)(rng);
    const int first = std::uniform_int_distribution<int>(0, frames - length)(rng);
    for (int f = first; f < first + length; ++f) keyframes.push_back(f);
  } else {
    const double density = unit(rng);
    for (int f = 0; f < frames; ++f) {
      if (unit(rng) < density) keyframes.push_back(f);
    }
    if (keyframes.empty()) keyframes.push_back(std::uniform_int_distribution<int>(0, frames - 1)(rng));
  }
  return TrajectorySpec::from_global(s.world, joints, keyframes);
}

std::vector<int> span_frames(int first, int count) {
  std::vector<int> out(count);
  std::iota(out.begin(), out.end(), first);
  return out;
}

}  // namespace

Checkpoint train_stage(const TrainConfig& config, const Dataset& dataset, Denoiser model,
                       const TrainProgress& progress) {
  config.validate();
  if (dataset.train.empty()) throw DataError("training split is empty");
  const Skeleton& skeleton = dataset.skeleton;
  const int joints = skeleton.joint_count();
  const bool stage1 = config.stage == 1;
  const RepresentationKind kind = stage1 ? config.representation : RepresentationKind::kRedundant;
  const ChannelLayout layout(kind, joints);
  const DenoiserConfig& mc = model.config();
  if (mc.channel_count != layout.width()) {
    throw ConfigError("model channel count does not match the training representation");
  }
  if ((mc.stage == Stage::kTrajectoryControl) != stage1) {
    throw ConfigError("model stage does not match the training stage");
  }

  Checkpoint ckpt(mc);
  ckpt.train_config = config;
  ckpt.representation = kind;
  ckpt.schedule = ScheduleConfig::scaled_linear(config.diffusion_steps);
  ckpt.normalizer = dataset.normalizer.prefix(layout.width());
  const Normalizer& norm = ckpt.normalizer;
  const NoiseSchedule schedule = ckpt.noise_schedule();
  const TextEncoder encoder = dataset_text_encoder(mc.text_embed_dim);

  std::vector<PreparedSample> data;
  data.reserve(dataset.train.size());
  for (const auto& s : dataset.train) {
    PreparedSample p;
    p.clean = norm.normalize(s.motion.data().leftCols(layout.width()));
    p.world = to_global(s.motion.data(), joints);
    p.text = encoder.encode(s.prompt).embedding;
    data.push_back(std::move(p));
  }

  Rng rng(config.seed);
  nn::Adam adam(model.parameters());
  std::uniform_int_distribution<int> pick(0, static_cast<int>(data.size()) - 1);
  std::uniform_int_distribution<int> step_dist(1, config.diffusion_steps);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimConfig sim;
  sim.inpainting_probability = config.inpainting_probability;
  const int b = config.batch_size;
  double initial_loss = -1.0;

  for (int it = 0; it < config.iterations; ++it) {
    const double lr = it < config.lr_drop_at ? config.lr_initial : config.lr_final;
    std::vector<const PreparedSample*> picked(b);
    DenoiserBatch batch;
    std::vector<TrajectorySpec> specs;
    std::vector<MotionTensor> clean(b), noise(b);
    for (int i = 0; i < b; ++i) {
      picked[i] = &data[pick(rng)];
      clean[i] = picked[i]->clean;
      batch.t.push_back(step_dist(rng));
      noise[i] = standard_normal(clean[i].rows(), clean[i].cols(), rng);
      const bool drop = unit(rng) < config.text_dropout;
      batch.text.push_back(drop ? Eigen::VectorXd::Zero(mc.text_embed_dim) : picked[i]->text);
    }
    if (stage1) {
      for (int i = 0; i < b; ++i) {
        specs.push_back(sample_condition(*picked[i], skeleton, rng));
        batch.x_t.push_back(q_sample(clean[i], batch.t[i], noise[i], schedule));
        batch.trajectory.push_back(trajectory_features(specs[i], skeleton, norm.position_scale));
      }
    } else {
      SimBatch sb = sim_prepare_batch(clean, batch.t, noise, unit(rng), skeleton, layout, schedule,
                                      sim, rng);
      for (int i = 0; i < b; ++i) {
        auto& sample = sb.samples[i];
        batch.x_t.push_back(std::move(sample.model_input));
        if (sample.mask) {
          specs.push_back(TrajectorySpec::from_global(
              picked[i]->world, sample.mask->joints,
              span_frames(sample.mask->first_frame, sample.mask->frame_count)));
        } else {
          specs.push_back(TrajectorySpec::empty(clean[i].rows(), joints));
        }
      }
    }

    Denoiser::Cache cache;
    const std::vector<MotionTensor> pred = model.forward(batch, cache);
    std::vector<MotionTensor> grads(b);
    LossRecord rec;
    rec.iteration = it;
    rec.learning_rate = lr;
    for (int i = 0; i < b; ++i) {
      MotionTensor g_elem, g_global;
      rec.loss_elem += loss_elem(clean[i], pred[i], &g_elem) / b;
      rec.loss_global +=
          global_loss_quiet(norm.denormalize(pred[i]), specs[i], joints, &g_global) / b;
      g_global.array().rowwise() *= norm.std.array();
      grads[i] = (g_elem + g_global) / b;
    }
    rec.loss = rec.loss_elem + rec.loss_global;
    if (initial_loss < 0.0) initial_loss = rec.loss;
    if (!std::isfinite(rec.loss) || rec.loss > 1e3 * initial_loss) {
      throw DivergenceError("training diverged at iteration " + std::to_string(it) + ": loss " +
                            std::to_string(rec.loss) + " vs initial " +
                            std::to_string(initial_loss));
    }
    adam.zero_grad();
    model.backward(cache, grads);
    adam.clip_grad_norm(config.clip_norm);
    adam.step(lr);
    ckpt.history.push_back(rec);
    if (progress) progress(rec);
  }
  ckpt.model = std::move(model);
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  nlohmann::json header = {{"model", checkpoint.model_config.to_json()},
                           {"train", checkpoint.train_config.to_json()},
                           {"representation", to_string(checkpoint.representation)},
                           {"schedule",
                            {{"steps", checkpoint.schedule.steps},
                             {"beta_start", checkpoint.schedule.beta_start},
                             {"beta_end", checkpoint.schedule.beta_end},
                             {"kind", checkpoint.schedule.kind}}},
                           {"normalizer", checkpoint.normalizer.to_json()}};
  write_json_file((fs::path(directory) / "checkpoint.json").string(), header);
  save_tensor_archive((fs::path(directory) / "weights.bin").string(), {{"model", header["model"]}},
                      checkpoint.model.parameters());
  std::ofstream csv(fs::path(directory) / "loss.csv");
  if (!csv) throw DataError("cannot write loss history in " + directory);
  csv << "iteration,lr,loss,loss_elem,loss_global\n";
  csv.precision(17);
  for (const auto& r : checkpoint.history) {
    csv << r.iteration << ',' << r.learning_rate << ',' << r.loss << ',' << r.loss_elem << ','
        << r.loss_global << '\n';
  }
}

Checkpoint load_checkpoint(const std::string& directory) {
  namespace fs = std::filesystem;
  const nlohmann::json header = read_json_file((fs::path(directory) / "checkpoint.json").string());
  Checkpoint ckpt(DenoiserConfig::from_json(header.at("model")));
  ckpt.train_config = TrainConfig::from_json(header.at("train"));
  ckpt.representation = representation_from_string(header.at("representation"));
  const auto& s = header.at("schedule");
  ckpt.schedule.steps = s.at("steps");
  ckpt.schedule.beta_start = s.at("beta_start");
  ckpt.schedule.beta_end = s.at("beta_end");
  ckpt.schedule.kind = s.at("kind");
  ckpt.normalizer = Normalizer::from_json(header.at("normalizer"));
  const nlohmann::json weights =
      load_tensor_archive((fs::path(directory) / "weights.bin").string(), ckpt.model.parameters());
  if (weights.contains("model") && weights.at("model") != header.at("model")) {
    throw ConfigError("checkpoint weights do not match its model config");
  }
  if (ckpt.normalizer.channels() != ckpt.model_config.channel_count) {
    throw ConfigError("checkpoint normalizer does not match the model channel count");
  }
  std::ifstream csv(fs::path(directory) / "loss.csv");
  std::string line;
  if (csv && std::getline(csv, line)) {
    while (std::getline(csv, line)) {
      LossRecord r;
      char c;
      std::istringstream in(line);
      in >> r.iteration >> c >> r.learning_rate >> c >> r.loss >> c >> r.loss_elem >> c >>
          r.loss_global;
      if (in) ckpt.history.push_back(r);
    }
  }
  return ckpt;
}

std::vector<double> smoothed_losses(const std::vector<LossRecord>& history, double decay) {
  std::vector<double> out;
  out.reserve(history.size());
  double avg = 0.0;
  for (size_t i = 0; i < history.size(); ++i) {
    avg = i == 0 ? history[i].loss : decay * avg + (1.0 - decay) * history[i].loss;
    out.push_back(avg);
  }
  return out;
}

}  // namespace trajmotion
