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

#include "trajmotion/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "trajmotion/errors.h"

namespace trajmotion {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<int> sampling_steps(int total, Sampler sampler, int requested) {
  if (sampler == Sampler::kDdpm) {
    if (requested != 0 && requested != total) {
      throw ConfigError("DDPM sampling runs every step; pass the DDIM sampler for fewer steps");
    }
    std::vector<int> steps(total);
    for (int k = 0; k < total; ++k) steps[k] = total - k;
    return steps;
  }
  return ddim_timesteps(total, requested == 0 ? total : requested);
}

}  // namespace

const char* to_string(Sampler sampler) { return sampler == Sampler::kDdpm ? "ddpm" : "ddim"; }

Sampler sampler_from_string(const std::string& name) {
  if (name == "ddpm") return Sampler::kDdpm;
  if (name == "ddim") return Sampler::kDdim;
  throw ConfigError("unknown sampler '" + name + "'");
}

const char* to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone:
      return "none";
    case Ablation::kPassAllJoints:
      return "pass_all_joints";
    case Ablation::kPassTorsoJoints:
      return "pass_torso_joints";
    case Ablation::kSingleStage:
      return "single_stage";
    case Ablation::kRedundantStage1:
      return "redundant_stage1";
  }
  return "?";
}

Ablation ablation_from_string(const std::string& name) {
  for (auto a : {Ablation::kNone, Ablation::kPassAllJoints, Ablation::kPassTorsoJoints,
                 Ablation::kSingleStage, Ablation::kRedundantStage1}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown ablation '" + name + "'");
}

GuidanceSchedule GuidanceConfig::schedule_for(int total_steps) const {
  if (optimizer == GuidanceOptimizer::kSgd) {
    return make_flat_schedule(total_steps, optimizer, sgd_iterations, sgd_learning_rate);
  }
  return make_guidance_schedule(total_steps);
}

TrajectorySample sample_trajectory_control(const Checkpoint& checkpoint,
                                           const Eigen::VectorXd& text,
                                           const TrajectorySpec& spec, const Skeleton& skeleton,
                                           const TrajectorySampleOptions& options,
                                           std::uint64_t seed) {
  if (checkpoint.model_config.stage != Stage::kTrajectoryControl) {
    throw ConfigError("stage-1 sampling needs a trajectory-control checkpoint");
  }
  spec.validate();
  if (spec.joint_count() != skeleton.joint_count()) {
    throw ConfigError("trajectory spec does not match the skeleton");
  }
  const int joints = skeleton.joint_count();
  const int frames = spec.frames();
  const int channels = checkpoint.model_config.channel_count;
  const NoiseSchedule schedule = checkpoint.noise_schedule();
  const Normalizer& norm = checkpoint.normalizer;
  const int total = schedule.steps();
  const GuidanceSchedule phases = options.guidance.schedule_for(total);
  const Eigen::MatrixXd features = trajectory_features(spec, skeleton, norm.position_scale);
  const bool guided = options.guidance.enabled && spec.has_constraints();

  auto error_of = [&](const MotionTensor& normalized) {
    return spec.has_constraints() ? mean_control_error(norm.denormalize(normalized), spec, joints)
                                  : 0.0;
  };
  auto refine = [&](const MotionTensor& x, int t) {
    if (!guided) return x;
    const GuidanceResult r =
        guide_posterior(x, t, spec, phase_for_step(phases, t), skeleton, &norm);
    return r.mu;
  };

  TrajectorySample out;
  Rng rng(seed);
  DiffusionState state(total, standard_normal(frames, channels, rng), derive_seed(seed, 1));
  const std::vector<int> steps = sampling_steps(total, options.sampler, options.ddim_steps);
  for (size_t k = 0; k < steps.size(); ++k) {
    const int t = steps[k];
    state.t = t;
    const MotionTensor x0_hat = checkpoint.model.predict_x0(state.x, t, text, &features);
    const double predicted = error_of(x0_hat);
    if (options.sampler == Sampler::kDdpm) {
      double after = 0.0;
      state = ddpm_step(std::move(state), x0_hat, schedule, [&](const MotionTensor& mu, int step) {
        MotionTensor refined = refine(mu, step);
        after = error_of(refined);
        return refined;
      });
      out.trace.record(t, predicted, after);
    } else {
      const int t_next = k + 1 < steps.size() ? steps[k + 1] : 0;
      state = ddim_step(std::move(state), x0_hat, t_next, schedule);
      state.x = refine(state.x, std::max(t_next, 1));
      if (!state.x.allFinite()) throw DivergenceError("non-finite sample during DDIM guidance");
      out.trace.record(t, predicted, error_of(state.x));
    }
  }
  out.motion = norm.denormalize(state.x);
  return out;
}

MotionTensor sample_motion_completion(const Checkpoint& checkpoint, const Eigen::VectorXd& text,
                                      const MaskSpec* observations, int frames,
                                      const CompletionOptions& options, std::uint64_t seed) {
  if (checkpoint.model_config.stage != Stage::kMotionCompletion) {
    throw ConfigError("stage-2 sampling needs a motion-completion checkpoint");
  }
  const int channels = checkpoint.model_config.channel_count;
  const Normalizer& norm = checkpoint.normalizer;
  const NoiseSchedule schedule = checkpoint.noise_schedule();
  const int total = schedule.steps();
  std::optional<MaskSpec> normalized;
  if (observations) {
    observations->validate();
    if (observations->frames() != frames || observations->channels() != channels) {
      throw ConfigError("observations do not match the stage-2 tensor shape");
    }
    normalized = *observations;
    normalized->observed = (observations->mask.array() != 0.0)
                               .select(norm.normalize(observations->observed), 0.0);
  }

  Rng rng(seed);
  Rng obs_rng(derive_seed(seed, 2));
  DiffusionState state(total, standard_normal(frames, channels, rng), derive_seed(seed, 1));
  const std::vector<int> steps = sampling_steps(total, options.sampler, options.ddim_steps);
  for (size_t k = 0; k < steps.size(); ++k) {
    const int t = steps[k];
    state.t = t;
    if (normalized) {
      const MotionTensor eps = standard_normal(frames, channels, obs_rng);
      state.x = substitute_observations(state.x, t, *normalized, schedule, eps,
                                        options.observation_noise);
    }
    const MotionTensor x0_hat = checkpoint.model.predict_x0(state.x, t, text);
    if (options.sampler == Sampler::kDdpm) {
      state = ddpm_step(std::move(state), x0_hat, schedule);
    } else {
      const int t_next = k + 1 < steps.size() ? steps[k + 1] : 0;
      state = ddim_step(std::move(state), x0_hat, t_next, schedule);
    }
  }
  MotionTensor out = norm.denormalize(state.x);
  if (observations) {
    // Exact copy in physical units; a normalize/denormalize round trip is not
    // bit-exact.
    out = (observations->mask.array() != 0.0).select(observations->observed, out);
  }
  return out;
}

std::vector<int> passed_joints(const TrajectorySpec& spec, Ablation ablation,
                               const Skeleton& skeleton) {
  std::set<int> joints(spec.controlled_joints.begin(), spec.controlled_joints.end());
  joints.insert(0);
  if (ablation == Ablation::kPassTorsoJoints) {
    joints.insert(skeleton.index_of("head"));
  } else if (ablation == Ablation::kPassAllJoints) {
    for (int j = 0; j < skeleton.joint_count(); ++j) joints.insert(j);
  }
  return {joints.begin(), joints.end()};
}

namespace {

SampleMetrics sample_metrics(const GlobalMotion& world, const TrajectorySpec& spec,
                             const Skeleton& skeleton) {
  SampleMetrics m;
  const std::vector<GlobalMotion> g{world};
  const std::vector<TrajectorySpec> s{spec};
  m.avg_err_cm = average_error(g, s);
  m.loc_err_pct = location_error(g, s);
  m.trajectory_failed = trajectory_error(g, s) > 0.0;
  m.foot_skating_ratio = foot_skating_ratio(world, skeleton);
  return m;
}

void check_request(const GenerationRequest& request, const Checkpoint& stage1,
                   const Checkpoint* stage2) {
  if (stage1.model_config.stage != Stage::kTrajectoryControl) {
    throw ConfigError("the first checkpoint must be a trajectory-control model");
  }
  const bool redundant = stage1.representation == RepresentationKind::kRedundant;
  switch (request.ablation) {
    case Ablation::kSingleStage:
      if (!redundant) throw ConfigError("single_stage needs a redundant stage-1 checkpoint");
      return;
    case Ablation::kRedundantStage1:
      if (!redundant) throw ConfigError("redundant_stage1 needs a redundant stage-1 checkpoint");
      break;
    default:
      break;
  }
  if (!stage2) throw ConfigError("two-stage generation needs a motion-completion checkpoint");
  if (stage2->model_config.stage != Stage::kMotionCompletion) {
    throw ConfigError("the second checkpoint must be a motion-completion model");
  }
  if (stage2->model_config.text_embed_dim != stage1.model_config.text_embed_dim) {
    throw ConfigError("stage checkpoints disagree on the text embedding size");
  }
}

}  // namespace

GenerationResult generate(const GenerationRequest& request, const Checkpoint& stage1,
                          const Checkpoint* stage2, const Skeleton& skeleton) {
  check_request(request, stage1, stage2);
  const int joints = skeleton.joint_count();
  const int frames = request.trajectory.frames();
  if (frames < 2 || frames > stage1.model_config.max_frames) {
    throw ConfigError("frame count outside the model's range");
  }
  const TextEncoder encoder = dataset_text_encoder(stage1.model_config.text_embed_dim);
  const Eigen::VectorXd text = encoder.encode(request.prompt).embedding;

  TrajectorySampleOptions s1;
  s1.sampler = request.sampler;
  s1.ddim_steps = request.ddim_steps_s1;
  s1.guidance = request.guidance;
  const Eigen::VectorXd s1_text = request.stage1_text ? text : Eigen::VectorXd::Zero(text.size());
  TrajectorySample first =
      sample_trajectory_control(stage1, s1_text, request.trajectory, skeleton, s1, request.seed);

  GenerationResult out;
  out.trace = std::move(first.trace);
  out.stage1 = first.motion;
  const ChannelLayout redundant = ChannelLayout::redundant(joints);
  if (request.ablation == Ablation::kSingleStage) {
    out.motion = Motion(redundant, first.motion);
  } else {
    const MotionTensor source =
        embed_in_layout(Motion(ChannelLayout(stage1.representation, joints), first.motion),
                        redundant)
            .data();
    std::vector<int> all_frames(frames);
    for (int f = 0; f < frames; ++f) all_frames[f] = f;
    out.observations =
        build_observation_mask(source, skeleton, redundant,
                               passed_joints(request.trajectory, request.ablation, skeleton),
                               all_frames, /*allow_any_joint=*/true);
    CompletionOptions s2;
    s2.sampler = request.sampler;
    s2.ddim_steps = request.ddim_steps_s2;
    s2.observation_noise = request.observation_noise;
    out.motion = Motion(redundant, sample_motion_completion(*stage2, text, &out.observations, frames,
                                                            s2, derive_seed(request.seed, 7)));
  }
  out.world = to_global(out.motion.data(), joints);
  if (request.trajectory.has_constraints()) {
    out.metrics = sample_metrics(out.world, request.trajectory, skeleton);
  }
  return out;
}

MaskSpec ground_truth_observations(const Motion& reference, const std::vector<int>& joints,
                                   const Skeleton& skeleton) {
  const ChannelLayout redundant = ChannelLayout::redundant(skeleton.joint_count());
  const MotionTensor source = embed_in_layout(reference, redundant).data();
  std::vector<int> all_frames(reference.frames());
  for (int f = 0; f < reference.frames(); ++f) all_frames[f] = f;
  return build_observation_mask(source, skeleton, redundant, joints, all_frames, true);
}

std::vector<int> control_frames(int frames, double density) {
  if (frames < 1) throw ConfigError("control frames need a positive frame count");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("density must lie in (0, 1]");
  const int count = std::clamp(static_cast<int>(std::lround(density * frames)), 1, frames);
  std::vector<int> out;
  for (int k = 0; k < count; ++k) {
    const int f = static_cast<int>(std::floor((k + 0.5) * frames / count));
    if (out.empty() || f != out.back()) out.push_back(std::min(f, frames - 1));
  }
  return out;
}

std::vector<ControlConfig> standard_control_configs(const Skeleton& skeleton) {
  std::vector<ControlConfig> out;
  for (int j : skeleton.controllable_joints) {
    out.push_back({skeleton.joint_names[j], {j}, 1.0});
  }
  std::vector<int> all(skeleton.controllable_joints.begin(), skeleton.controllable_joints.end());
  std::sort(all.begin(), all.end());
  out.push_back({"all", all, 1.0});
  out.push_back({"all_sparse", all, 0.25});
  return out;
}

MetricsReport evaluate(const Dataset& dataset, const std::vector<DatasetSample>& split,
                       const Checkpoint* stage1, const Checkpoint* stage2,
                       const ControlConfig& control, const EvaluationOptions& options,
                       std::vector<GenerationResult>* results) {
  if (split.empty()) throw DataError("evaluation split is empty");
  const Skeleton& skeleton = dataset.skeleton;
  const int joints = skeleton.joint_count();
  const size_t n = options.max_samples > 0
                       ? std::min(split.size(), static_cast<size_t>(options.max_samples))
                       : split.size();
  if (options.mode == EvalMode::kTwoStage && !stage1) throw ConfigError("missing stage-1 checkpoint");
  if ((options.mode == EvalMode::kTextOnly || options.mode == EvalMode::kGroundTruthObservations) &&
      !stage2) {
    throw ConfigError("missing stage-2 checkpoint");
  }
  const int embed_dim = stage1 ? stage1->model_config.text_embed_dim
                        : stage2 ? stage2->model_config.text_embed_dim
                                 : DenoiserConfig{}.text_embed_dim;
  const TextEncoder encoder = dataset_text_encoder(embed_dim);

  std::vector<GlobalMotion> generated, reference;
  std::vector<TrajectorySpec> specs;
  Eigen::MatrixXd text(n, embed_dim);
  double skating = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (size_t i = 0; i < n; ++i) {
    const DatasetSample& sample = split[i];
    const GlobalMotion truth = to_global(sample.motion, skeleton);
    const TrajectorySpec spec =
        TrajectorySpec::from_global(truth, control.joints, control_frames(truth.frames(), control.density));
    text.row(i) = encoder.encode(sample.prompt).embedding.transpose();
    GenerationRequest request = options.request;
    request.prompt = sample.prompt;
    request.trajectory = spec;
    request.seed = derive_seed(options.request.seed, static_cast<std::uint64_t>(sample.id));

    GenerationResult result;
    switch (options.mode) {
      case EvalMode::kTwoStage:
        result = generate(request, *stage1, stage2, skeleton);
        break;
      case EvalMode::kTextOnly:
      case EvalMode::kGroundTruthObservations: {
        CompletionOptions s2;
        s2.sampler = request.sampler;
        s2.ddim_steps = request.ddim_steps_s2;
        s2.observation_noise = request.observation_noise;
        if (options.mode == EvalMode::kGroundTruthObservations) {
          result.observations = ground_truth_observations(
              sample.motion, passed_joints(spec, request.ablation, skeleton), skeleton);
        }
        const MaskSpec* obs =
            options.mode == EvalMode::kGroundTruthObservations ? &result.observations : nullptr;
        result.motion = Motion(ChannelLayout::redundant(joints),
                               sample_motion_completion(*stage2, text.row(i).transpose(), obs,
                                                        truth.frames(), s2,
                                                        derive_seed(request.seed, 7)));
        result.world = to_global(result.motion.data(), joints);
        result.metrics = sample_metrics(result.world, spec, skeleton);
        break;
      }
      case EvalMode::kOracle:
        result.motion = sample.motion;
        result.world = truth;
        result.metrics = sample_metrics(result.world, spec, skeleton);
        break;
    }
    skating += foot_skating_ratio(result.world, skeleton);
    generated.push_back(result.world);
    reference.push_back(truth);
    specs.push_back(spec);
    if (results) results->push_back(std::move(result));
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  MetricsReport report;
  report.samples = static_cast<int>(n);
  report.seconds_per_sample = elapsed / static_cast<double>(n);
  report.traj_err_pct = trajectory_error(generated, specs);
  report.loc_err_pct = location_error(generated, specs);
  report.avg_err_cm = average_error(generated, specs);
  report.foot_skating_ratio = skating / static_cast<double>(n);
  const Eigen::MatrixXd gen_features = feature_matrix(generated);
  if (n >= 2) report.fid_proxy = fid_proxy(gen_features, feature_matrix(reference));
  const int subset = std::min<int>(options.diversity_subset, static_cast<int>(n) / 2);
  if (subset >= 1) report.diversity = diversity(gen_features, subset, options.request.seed);

  std::vector<GlobalMotion> train_world;
  Eigen::MatrixXd train_text(dataset.train.size(), embed_dim);
  for (size_t i = 0; i < dataset.train.size(); ++i) {
    train_world.push_back(to_global(dataset.train[i].motion, skeleton));
    train_text.row(i) = encoder.encode(dataset.train[i].prompt).embedding.transpose();
  }
  if (train_world.size() >= 2 && static_cast<int>(n) >= 2) {
    const MotionTextEmbedder embedder = MotionTextEmbedder::fit(feature_matrix(train_world), train_text);
    report.r_precision_top_k = r_precision(embedder.embed(gen_features), text,
                                           std::min(options.pool, static_cast<int>(n)),
                                           options.request.seed);
  }
  return report;
}

std::vector<ErrorTrace> instrument(const Checkpoint& stage1, const Dataset& dataset,
                                   const InstrumentConfig& config) {
  if (dataset.test.empty()) throw DataError("instrumentation needs test samples");
  if (config.samples < 1) throw ConfigError("instrumentation needs at least one sample");
  const Skeleton& skeleton = dataset.skeleton;
  const TextEncoder encoder = dataset_text_encoder(stage1.model_config.text_embed_dim);
  TrajectorySampleOptions options;
  options.guidance.optimizer = config.optimizer;
  std::vector<ErrorTrace> traces;
  for (int i = 0; i < config.samples; ++i) {
    const DatasetSample& sample = dataset.test[i % dataset.test.size()];
    const GlobalMotion truth = to_global(sample.motion, skeleton);
    const TrajectorySpec spec = TrajectorySpec::from_global(
        truth, config.control.joints, control_frames(truth.frames(), config.control.density));
    const Eigen::VectorXd text = config.use_text ? encoder.encode(sample.prompt).embedding
                                                 : Eigen::VectorXd::Zero(encoder.embed_dim());
    traces.push_back(sample_trajectory_control(stage1, text, spec, skeleton, options,
                                               derive_seed(config.seed, static_cast<std::uint64_t>(i)))
                         .trace);
  }
  return traces;
}

}  // namespace trajmotion
