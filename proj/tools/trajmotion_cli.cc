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

// Command-line front end: dataset synthesis, training, generation,
// evaluation and guidance instrumentation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajmotion/errors.h"
#include "trajmotion/io.h"
#include "trajmotion/pipeline.h"

namespace {

using namespace trajmotion;

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

// "pelvis,left_wrist", "all" (six controllable joints) or "standard" (the
// full evaluation sweep, evaluate only).
std::vector<int> parse_joints(const std::string& spec, const Skeleton& skeleton) {
  if (spec == "all") return {skeleton.controllable_joints.begin(), skeleton.controllable_joints.end()};
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) out.push_back(skeleton.index_of(name));
  }
  if (out.empty()) throw ConfigError("no joints given");
  return out;
}

struct ModelFlags {
  int width = 64;
  int layers = 2;
  int heads = 4;
};

struct TrainFlags {
  std::string data;
  std::string out;
  std::string train_config;
  TrainConfig config;
  ModelFlags model;
  std::string representation = "simplified";
  int log_every = 100;
};

void add_train_options(CLI::App* cmd, TrainFlags& f, int stage) {
  f.config.iterations = 3000;
  f.config.lr_initial = 1e-3;
  f.config.lr_drop_at = 2250;
  f.config.lr_final = 1e-4;
  f.config.stage = stage;
  cmd->add_option("--data", f.data, "dataset directory")->required();
  cmd->add_option("--out", f.out, "checkpoint directory")->required();
  cmd->add_option("--train-config", f.train_config,
                  "JSON train config; explicit flags override its fields");
  cmd->add_option("--iterations", f.config.iterations);
  cmd->add_option("--lr", f.config.lr_initial);
  cmd->add_option("--lr-final", f.config.lr_final);
  cmd->add_option("--lr-drop-at", f.config.lr_drop_at);
  cmd->add_option("--batch-size", f.config.batch_size);
  cmd->add_option("--steps", f.config.diffusion_steps, "diffusion steps T");
  cmd->add_option("--seed", f.config.seed);
  cmd->add_option("--text-dropout", f.config.text_dropout);
  cmd->add_option("--width", f.model.width);
  cmd->add_option("--layers", f.model.layers);
  cmd->add_option("--heads", f.model.heads);
  cmd->add_option("--log-every", f.log_every);
  if (stage == 1) {
    cmd->add_option("--repr", f.representation, "simplified, position_rotation or redundant");
  } else {
    cmd->add_option("--inpainting-probability", f.config.inpainting_probability,
                    "1.0 trains without masked inputs");
  }
}

int run_train(CLI::App* cmd, TrainFlags& f) {
  TrainConfig config = f.config;
  if (!f.train_config.empty()) {
    // Start from the file, then re-apply every flag given on the command line.
    nlohmann::json j = f.config.to_json();
    const nlohmann::json file = read_json_file(f.train_config);
    for (const auto& [key, value] : file.items()) j[key] = value;
    const nlohmann::json flags = f.config.to_json();
    const std::vector<std::pair<const char*, const char*>> names = {
        {"--iterations", "iterations"},     {"--lr", "lr_initial"},
        {"--lr-final", "lr_final"},         {"--lr-drop-at", "lr_drop_at"},
        {"--batch-size", "batch_size"},     {"--steps", "diffusion_steps"},
        {"--seed", "seed"},                 {"--text-dropout", "text_dropout"},
        {"--inpainting-probability", "inpainting_probability"}};
    for (const auto& [flag, key] : names) {
      if (cmd->get_option_no_throw(flag) && cmd->count(flag) > 0) j[key] = flags.at(key);
    }
    config = TrainConfig::from_json(j);
    config.stage = f.config.stage;
  }
  if (config.stage == 1) config.representation = representation_from_string(f.representation);
  const Dataset ds = load_dataset(f.data);
  DenoiserConfig mc = default_model_config(config, ds);
  mc.width = f.model.width;
  mc.layers = f.model.layers;
  mc.heads = f.model.heads;
  mc.init_seed = config.seed;
  const Checkpoint ckpt = train_stage(config, ds, Denoiser(mc), [&](const LossRecord& r) {
    if (f.log_every > 0 && (r.iteration % f.log_every == 0 || r.iteration + 1 == config.iterations)) {
      std::fprintf(stderr, "iter %6d  lr %.2e  loss %.5f  elem %.5f  global %.5f\n", r.iteration,
                   r.learning_rate, r.loss, r.loss_elem, r.loss_global);
    }
  });
  save_checkpoint(ckpt, f.out);
  std::cout << "saved " << f.out << '\n';
  return 0;
}

struct SamplingFlags {
  std::string sampler = "ddpm";
  int ddim_s1 = 0;
  int ddim_s2 = 0;
  std::string ablation = "none";
  std::string optimizer = "lbfgs";
  bool no_guidance = false;
  bool no_text = false;
  std::string observation_noise = "clean";
  std::uint64_t seed = 0;
};

void add_sampling_options(CLI::App* cmd, SamplingFlags& f) {
  cmd->add_option("--sampler", f.sampler, "ddpm or ddim");
  cmd->add_option("--ddim-s1", f.ddim_s1, "DDIM steps for stage 1 (0: all)");
  cmd->add_option("--ddim-s2", f.ddim_s2, "DDIM steps for stage 2 (0: all)");
  cmd->add_option("--ablation", f.ablation,
                  "none, pass_all_joints, pass_torso_joints, single_stage, redundant_stage1");
  cmd->add_option("--optimizer", f.optimizer, "guidance optimizer: lbfgs or sgd");
  cmd->add_flag("--no-guidance", f.no_guidance);
  cmd->add_flag("--no-text", f.no_text, "drop the prompt in stage 1");
  cmd->add_option("--observation-noise", f.observation_noise, "clean or noised");
  cmd->add_option("--seed", f.seed);
}

GenerationRequest request_from(const SamplingFlags& f) {
  GenerationRequest r;
  r.sampler = sampler_from_string(f.sampler);
  r.ddim_steps_s1 = f.ddim_s1;
  r.ddim_steps_s2 = f.ddim_s2;
  r.ablation = ablation_from_string(f.ablation);
  r.guidance.enabled = !f.no_guidance;
  r.guidance.optimizer = optimizer_from_string(f.optimizer);
  r.stage1_text = !f.no_text;
  r.observation_noise = observation_noise_from_string(f.observation_noise);
  r.seed = f.seed;
  return r;
}

struct GenerateFlags {
  std::string s1, s2, prompt, traj_file, data, joints = "pelvis", out, csv, trace;
  int sample = -1;
  int frames = 0;
  double density = 1.0;
  SamplingFlags sampling;
};

int run_generate(const GenerateFlags& f) {
  const Skeleton skeleton = Skeleton::toy();
  const Checkpoint s1 = load_checkpoint(f.s1);
  std::optional<Checkpoint> s2;
  if (!f.s2.empty()) s2.emplace(load_checkpoint(f.s2));
  GenerationRequest req = request_from(f.sampling);
  req.prompt = f.prompt;
  if (!f.traj_file.empty()) {
    req.trajectory = TrajectorySpec::from_json(read_json_file(f.traj_file), skeleton);
  } else if (!f.data.empty() && f.sample >= 0) {
    const Dataset ds = load_dataset(f.data);
    const DatasetSample* found = nullptr;
    for (const auto* split : {&ds.test, &ds.train}) {
      for (const auto& s : *split) {
        if (s.id == f.sample) found = &s;
      }
    }
    if (!found) throw ConfigError("no sample with id " + std::to_string(f.sample));
    const GlobalMotion truth = to_global(found->motion, skeleton);
    req.trajectory = TrajectorySpec::from_global(truth, parse_joints(f.joints, skeleton),
                                                 control_frames(truth.frames(), f.density));
    if (req.prompt.empty()) req.prompt = found->prompt;
  } else if (f.frames > 0) {
    req.trajectory = TrajectorySpec::empty(f.frames, skeleton.joint_count());
  } else {
    throw ConfigError("give --traj-file, --data with --sample, or --frames");
  }
  if (req.prompt.empty()) throw ConfigError("--prompt is required");
  const GenerationResult g = generate(req, s1, s2 ? &*s2 : nullptr, skeleton);
  if (!f.out.empty()) write_json_file(f.out, motion_to_json(g.motion, 20, "toy"));
  if (!f.csv.empty()) {
    std::ofstream csv(f.csv);
    if (!csv) throw ConfigError("cannot write " + f.csv);
    csv << "frame";
    for (const auto& name : skeleton.joint_names) csv << ',' << name << "_x," << name << "_y," << name << "_z";
    csv << '\n';
    csv.precision(9);
    for (int fr = 0; fr < g.world.frames(); ++fr) {
      csv << fr;
      for (Eigen::Index c = 0; c < g.world.positions.cols(); ++c) csv << ',' << g.world.positions(fr, c);
      csv << '\n';
    }
  }
  if (!f.trace.empty()) {
    std::ofstream tr(f.trace);
    if (!tr) throw ConfigError("cannot write " + f.trace);
    summarize_traces({g.trace}).write_csv(tr);
  }
  if (g.metrics) {
    std::printf("avg_err_cm %.4f  loc_err_pct %.2f  traj_failed %d  skating %.4f\n",
                g.metrics->avg_err_cm, g.metrics->loc_err_pct, g.metrics->trajectory_failed ? 1 : 0,
                g.metrics->foot_skating_ratio);
  } else {
    std::printf("generated %d frames, skating %.4f\n", g.motion.frames(),
                foot_skating_ratio(g.world, skeleton));
  }
  return 0;
}

struct EvaluateFlags {
  std::string data, s1, s2, joints = "pelvis", mode = "two-stage", split = "test", json;
  double density = 1.0;
  int max_samples = 0;
  int diversity_subset = 50;
  int pool = 32;
  SamplingFlags sampling;
};

EvalMode eval_mode_from(const std::string& name) {
  if (name == "two-stage") return EvalMode::kTwoStage;
  if (name == "text-only") return EvalMode::kTextOnly;
  if (name == "gt-observations") return EvalMode::kGroundTruthObservations;
  if (name == "oracle") return EvalMode::kOracle;
  throw ConfigError("unknown evaluation mode '" + name + "'");
}

int run_evaluate(const EvaluateFlags& f) {
  const Dataset ds = load_dataset(f.data);
  std::optional<Checkpoint> s1, s2;
  if (!f.s1.empty()) s1.emplace(load_checkpoint(f.s1));
  if (!f.s2.empty()) s2.emplace(load_checkpoint(f.s2));
  if (f.split != "test" && f.split != "train") throw ConfigError("split must be test or train");
  const auto& split = f.split == "test" ? ds.test : ds.train;

  std::vector<ControlConfig> controls;
  if (f.joints == "standard") {
    controls = standard_control_configs(ds.skeleton);
  } else {
    ControlConfig c;
    c.label = f.joints;
    c.joints = parse_joints(f.joints, ds.skeleton);
    c.density = f.density;
    controls.push_back(c);
  }
  EvaluationOptions opts;
  opts.mode = eval_mode_from(f.mode);
  opts.request = request_from(f.sampling);
  opts.max_samples = f.max_samples;
  opts.diversity_subset = f.diversity_subset;
  opts.pool = f.pool;

  nlohmann::json all = nlohmann::json::array();
  MetricsReport::print_header(std::cout);
  for (const auto& c : controls) {
    const MetricsReport r = evaluate(ds, split, s1 ? &*s1 : nullptr, s2 ? &*s2 : nullptr, c, opts);
    r.print_row(std::cout, c.label);
    std::cout.flush();
    nlohmann::json row = r.to_json();
    row["control"] = c.label;
    row["density"] = c.density;
    all.push_back(row);
  }
  if (!f.json.empty()) write_json_file(f.json, all);
  return 0;
}

struct InstrumentFlags {
  std::string data, s1, repr, optimizer = "sgd", joints = "pelvis", out;
  bool text = true;
  int samples = 50;
  double density = 1.0;
  std::uint64_t seed = 0;
};

int run_instrument(const InstrumentFlags& f) {
  const Dataset ds = load_dataset(f.data);
  const Checkpoint s1 = load_checkpoint(f.s1);
  if (!f.repr.empty() && representation_from_string(f.repr) != s1.representation) {
    throw ConfigError("--repr " + f.repr + " does not match the checkpoint (" +
                      to_string(s1.representation) + ")");
  }
  InstrumentConfig c;
  c.optimizer = optimizer_from_string(f.optimizer);
  c.use_text = f.text;
  c.samples = f.samples;
  c.control.label = f.joints;
  c.control.joints = parse_joints(f.joints, ds.skeleton);
  c.control.density = f.density;
  c.seed = f.seed;
  const ErrorTraceSummary s = summarize_traces(instrument(s1, ds, c));
  if (f.out.empty()) {
    s.write_csv(std::cout);
  } else {
    std::ofstream out(f.out);
    if (!out) throw ConfigError("cannot write " + f.out);
    s.write_csv(out);
  }
  std::fprintf(stderr, "final guided error %.5f m (std %.5f), mean predicted std %.5f\n",
               s.guided_mean.back(), s.guided_std.back(), s.mean_predicted_std());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Trajectory-controlled text-to-motion diffusion on a toy skeleton");
  app.set_config("--config", "", "INI/TOML file with option values; flags override it");
  app.require_subcommand(1);

  int size = 500;
  std::uint64_t data_seed = 0;
  int frames = 32;
  std::string data_out;
  auto* synth = app.add_subcommand("synth-data", "build the procedural dataset");
  synth->add_option("--size", size);
  synth->add_option("--seed", data_seed);
  synth->add_option("--frames", frames);
  synth->add_option("--out", data_out)->required();

  TrainFlags t1, t2;
  auto* train1 = app.add_subcommand("train-stage1", "train the trajectory-control model");
  add_train_options(train1, t1, 1);
  auto* train2 = app.add_subcommand("train-stage2", "train the motion-completion model");
  add_train_options(train2, t2, 2);

  GenerateFlags gen;
  auto* generate_cmd = app.add_subcommand("generate", "sample one motion");
  generate_cmd->add_option("--s1", gen.s1, "stage-1 checkpoint")->required();
  generate_cmd->add_option("--s2", gen.s2, "stage-2 checkpoint");
  generate_cmd->add_option("--prompt", gen.prompt);
  generate_cmd->add_option("--traj-file", gen.traj_file, "trajectory JSON");
  generate_cmd->add_option("--data", gen.data, "dataset to take a reference trajectory from");
  generate_cmd->add_option("--sample", gen.sample, "sample id in --data");
  generate_cmd->add_option("--joints", gen.joints, "controlled joints for --sample, or all");
  generate_cmd->add_option("--density", gen.density, "fraction of frames constrained");
  generate_cmd->add_option("--frames", gen.frames, "unconstrained generation length");
  generate_cmd->add_option("--out", gen.out, "motion JSON");
  generate_cmd->add_option("--csv", gen.csv, "world joint positions per frame");
  generate_cmd->add_option("--trace", gen.trace, "per-step control error CSV");
  add_sampling_options(generate_cmd, gen.sampling);

  EvaluateFlags ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a split");
  evaluate_cmd->add_option("--data", ev.data)->required();
  evaluate_cmd->add_option("--s1", ev.s1);
  evaluate_cmd->add_option("--s2", ev.s2);
  evaluate_cmd->add_option("--joints", ev.joints, "joint list, all, or standard");
  evaluate_cmd->add_option("--density", ev.density);
  evaluate_cmd->add_option("--mode", ev.mode, "two-stage, text-only, gt-observations, oracle");
  evaluate_cmd->add_option("--split", ev.split);
  evaluate_cmd->add_option("--max-samples", ev.max_samples);
  evaluate_cmd->add_option("--diversity-subset", ev.diversity_subset);
  evaluate_cmd->add_option("--pool", ev.pool, "R-precision pool size");
  evaluate_cmd->add_option("--json", ev.json, "write the rows as JSON");
  add_sampling_options(evaluate_cmd, ev.sampling);

  InstrumentFlags in;
  auto* instrument_cmd = app.add_subcommand("instrument", "per-step control error statistics");
  instrument_cmd->add_option("--data", in.data)->required();
  instrument_cmd->add_option("--s1", in.s1)->required();
  instrument_cmd->add_option("--repr", in.repr, "expected checkpoint representation");
  instrument_cmd->add_option("--optimizer", in.optimizer);
  instrument_cmd->add_flag("--text,!--no-text", in.text);
  instrument_cmd->add_option("--samples", in.samples);
  instrument_cmd->add_option("--joints", in.joints);
  instrument_cmd->add_option("--density", in.density);
  instrument_cmd->add_option("--seed", in.seed);
  instrument_cmd->add_option("--out", in.out, "CSV path (stdout when empty)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) {
      const Dataset ds = build_dataset(size, data_seed, frames);
      save_dataset(ds, data_out);
      std::cout << "wrote " << ds.train.size() << " train and " << ds.test.size()
                << " test samples to " << data_out << '\n';
      return 0;
    }
    if (*train1) return run_train(train1, t1);
    if (*train2) return run_train(train2, t2);
    if (*generate_cmd) return run_generate(gen);
    if (*evaluate_cmd) return run_evaluate(ev);
    if (*instrument_cmd) return run_instrument(in);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
