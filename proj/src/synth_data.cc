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

#include "trajmotion/synth_data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "trajmotion/diffusion.h"
#include "trajmotion/errors.h"
#include "trajmotion/io.h"

namespace trajmotion {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kThigh = 0.45;
constexpr double kShin = 0.45;
constexpr double kArm = 0.55;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Piecewise smoothstep interpolation through (u, value) keys.
double keyed(double u, std::initializer_list<std::pair<double, double>> keys) {
  auto it = keys.begin();
  auto prev = *it;
  for (++it; it != keys.end(); ++it) {
    if (u <= it->first) {
      const double w = smoothstep((u - prev.first) / (it->first - prev.first));
      return prev.second + w * (it->second - prev.second);
    }
    prev = *it;
  }
  return prev.second;
}

Eigen::Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

Eigen::Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Angles in radians. Index 0 is the left side (+X), 1 the right side.
struct Pose {
  double lean = 0.0;
  double hip[2] = {0.0, 0.0};
  double knee[2] = {0.0, 0.0};
  double swing[2] = {0.0, 0.0};
  double abduct[2] = {0.08, 0.08};
  double lift = 0.0;  // root height above the grounded stance
  double stance_height = -1.0;  // when set, the root height for IK-posed legs
};

struct PoseResult {
  double root_height = 0.0;
  std::vector<Eigen::Vector3d> local;     // per joint, root-facing frame
  std::vector<Eigen::Matrix3d> rotation;  // per joint, root-facing frame
};

struct ToyJoints {
  int pelvis, head, wrist[2], foot[2], knee[2];
  explicit ToyJoints(const Skeleton& s)
      : pelvis(s.index_of("pelvis")),
        head(s.index_of("head")),
        wrist{s.index_of("left_wrist"), s.index_of("right_wrist")},
        foot{s.index_of("left_foot"), s.index_of("right_foot")},
        knee{s.index_of("left_knee"), s.index_of("right_knee")} {}
};

PoseResult solve_pose(const Pose& pose, const ToyJoints& ids, int joint_count) {
  PoseResult r;
  r.local.assign(joint_count, Eigen::Vector3d::Zero());
  r.rotation.assign(joint_count, Eigen::Matrix3d::Identity());
  double extent = 0.0;
  for (int s = 0; s < 2; ++s) {
    extent = std::max(extent, kThigh * std::cos(pose.hip[s]) +
                                  kShin * std::cos(pose.hip[s] - pose.knee[s]));
  }
  r.root_height = pose.stance_height >= 0.0 ? pose.stance_height : extent + pose.lift;
  const Eigen::Vector3d pelvis(0.0, r.root_height, 0.0);
  const Eigen::Matrix3d torso = rot_x(pose.lean);
  r.local[ids.pelvis] = pelvis;
  r.rotation[ids.pelvis] = torso;
  r.local[ids.head] = pelvis + torso * Eigen::Vector3d(0.0, 0.65, 0.0);
  r.rotation[ids.head] = torso;
  for (int s = 0; s < 2; ++s) {
    const double side = s == 0 ? 1.0 : -1.0;
    const Eigen::Matrix3d arm = torso * rot_z(side * pose.abduct[s]) * rot_x(-pose.swing[s]);
    r.local[ids.wrist[s]] = pelvis + torso * Eigen::Vector3d(0.2 * side, 0.45, 0.0) +
                            arm * Eigen::Vector3d(0.0, -kArm, 0.0);
    r.rotation[ids.wrist[s]] = arm;
    const Eigen::Matrix3d thigh = rot_x(-pose.hip[s]);
    const Eigen::Matrix3d shin = rot_x(-(pose.hip[s] - pose.knee[s]));
    const Eigen::Vector3d knee =
        pelvis + Eigen::Vector3d(0.1 * side, 0.0, 0.0) + thigh * Eigen::Vector3d(0.0, -kThigh, 0.0);
    r.local[ids.knee[s]] = knee;
    r.rotation[ids.knee[s]] = thigh;
    r.local[ids.foot[s]] = knee + shin * Eigen::Vector3d(0.0, -kShin, 0.0);
    r.rotation[ids.foot[s]] = shin;
  }
  return r;
}

// Planted-foot gait: stance feet hold still in the world while the root
// advances `speed` per frame; swing feet catch up with zero speed at lift-off
// and touch-down. Leg angles come from two-link IK.
void apply_gait(Pose& pose, double speed, double phase, double cadence, double amplitude) {
  const double period = 2.0 * kPi / cadence;
  const double step = std::min(speed * period / 2.0, 0.7);
  const double reach = 0.98 * (kThigh + kShin);
  pose.stance_height = std::sqrt(reach * reach - 0.25 * step * step);
  const double lift = step > 0.0 ? 0.12 * amplitude : 0.0;
  for (int s = 0; s < 2; ++s) {
    const double cycle = (phase + s * kPi) / (2.0 * kPi);
    const double u = cycle - std::floor(cycle);
    double z, y;
    if (u < 0.5) {
      z = step / 2.0 - 2.0 * step * u;
      y = 0.0;
    } else {
      const double w = 2.0 * (u - 0.5);
      z = -step / 2.0 + step * w - step / kPi * std::sin(2.0 * kPi * w);
      y = lift * std::sin(kPi * w);
    }
    const double dy = y - pose.stance_height;
    const double dist = std::min(std::hypot(z, dy), 0.999 * (kThigh + kShin));
    const double toward = std::atan2(z, -dy);
    const double bend = std::acos(dist / (kThigh + kShin));
    pose.hip[s] = toward + bend;
    pose.knee[s] = 2.0 * bend;
  }
  const double arm = amplitude * std::min(0.5, 6.0 * speed);
  pose.swing[0] = -0.8 * arm * std::cos(phase);
  pose.swing[1] = 0.8 * arm * std::cos(phase);
  pose.lean += 0.5 * speed;
}

const char* side_name(int hand) { return hand == 0 ? "left" : "right"; }

}  // namespace

const char* to_string(MotionFamily family) {
  switch (family) {
    case MotionFamily::kWalkLine:
      return "walk_line";
    case MotionFamily::kWalkCircle:
      return "walk_circle";
    case MotionFamily::kWalkAndRaiseHand:
      return "walk_and_raise_hand";
    case MotionFamily::kStandWave:
      return "stand_wave";
    case MotionFamily::kJumpForward:
      return "jump_forward";
    case MotionFamily::kSitDown:
      return "sit_down";
  }
  return "?";
}

MotionFamily family_from_string(const std::string& name) {
  for (int i = 0; i < kMotionFamilyCount; ++i) {
    const auto f = static_cast<MotionFamily>(i);
    if (name == to_string(f)) return f;
  }
  throw ConfigError("unknown motion family '" + name + "'");
}

void FamilyParams::validate(MotionFamily family) const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DataError(std::string("parameter out of range: ") + what);
  };
  require(frames >= 8 && frames <= 64, "frames in [8, 64]");
  require(turn == 1 || turn == -1, "turn is +1 or -1");
  require(hand == 0 || hand == 1, "hand is 0 or 1");
  require(cadence >= 0.1 && cadence <= 1.0, "cadence in [0.1, 1]");
  require(amplitude >= 0.5 && amplitude <= 1.5, "amplitude in [0.5, 1.5]");
  require(std::isfinite(phase), "finite phase");
  switch (family) {
    case MotionFamily::kWalkLine:
    case MotionFamily::kWalkAndRaiseHand:
      require(speed >= 0.0 && speed <= 0.08, "walking speed in [0, 0.08] m/frame");
      break;
    case MotionFamily::kWalkCircle:
      require(speed > 0.0 && speed <= 0.08, "walking speed in (0, 0.08] m/frame");
      require(radius >= 0.5 && radius <= 5.0, "radius in [0.5, 5] m");
      break;
    case MotionFamily::kJumpForward:
      require(speed >= 0.0 && speed <= 0.15, "jump speed in [0, 0.15] m/frame");
      break;
    case MotionFamily::kStandWave:
    case MotionFamily::kSitDown:
      break;
  }
}

nlohmann::json FamilyParams::to_json() const {
  return {{"frames", frames}, {"speed", speed},   {"radius", radius},   {"turn", turn},
          {"hand", hand},     {"phase", phase},   {"cadence", cadence}, {"amplitude", amplitude}};
}

FamilyParams FamilyParams::from_json(const nlohmann::json& j) {
  FamilyParams p;
  p.frames = j.at("frames");
  p.speed = j.at("speed");
  p.radius = j.at("radius");
  p.turn = j.at("turn");
  p.hand = j.at("hand");
  p.phase = j.at("phase");
  p.cadence = j.at("cadence");
  p.amplitude = j.at("amplitude");
  return p;
}

std::vector<std::string> prompt_vocabulary() {
  return {"a",     "person", "stands", "still", "walks", "forward", "slowly", "quickly",
          "in",    "circle", "to",     "the",   "left",  "right",   "and",    "raises",
          "hand",  "waves",  "with",   "jumps", "sits",  "down"};
}

DatasetSample generate_sample(MotionFamily family, const FamilyParams& params,
                              std::uint64_t seed, const Skeleton& skeleton) {
  params.validate(family);
  const ToyJoints ids(skeleton);
  const int frames = params.frames;
  const int joints = skeleton.joint_count();
  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double base_abduct = 0.08 + 0.03 * jitter(rng);
  const double base_lean = 0.03 * jitter(rng);

  DatasetSample out;
  out.family = family;
  out.params = params;
  out.seed = seed;

  std::vector<double> yaw_rate(frames, 0.0);
  std::vector<Eigen::Vector2d> velocity(frames, Eigen::Vector2d::Zero());
  std::vector<PoseResult> poses;
  poses.reserve(frames);

  for (int i = 0; i < frames; ++i) {
    const double u = frames > 1 ? static_cast<double>(i) / (frames - 1) : 0.0;
    const double phase = params.phase + params.cadence * i;
    Pose pose;
    pose.abduct[0] = pose.abduct[1] = base_abduct;
    pose.lean = base_lean;
    switch (family) {
      case MotionFamily::kWalkLine:
        apply_gait(pose, params.speed, phase, params.cadence, params.amplitude);
        velocity[i] = {0.0, params.speed};
        break;
      case MotionFamily::kWalkCircle: {
        apply_gait(pose, params.speed, phase, params.cadence, params.amplitude);
        const double omega = params.speed / params.radius;
        yaw_rate[i] = params.turn * omega;
        // Chord length keeps every root sample on the circle of radius r.
        velocity[i] = {0.0, 2.0 * params.radius * std::sin(omega / 2.0)};
        pose.lean += 0.0;
        break;
      }
      case MotionFamily::kWalkAndRaiseHand: {
        apply_gait(pose, params.speed, phase, params.cadence, params.amplitude);
        velocity[i] = {0.0, params.speed};
        const double raise = smoothstep((u - 0.25) / 0.25);
        const int h = params.hand;
        pose.swing[h] = (1.0 - raise) * pose.swing[h] + raise * 2.6 * params.amplitude;
        break;
      }
      case MotionFamily::kStandWave: {
        const int h = params.hand;
        const double raise = smoothstep(u / 0.25);
        pose.abduct[h] = base_abduct + raise * (2.3 - base_abduct) +
                         raise * 0.3 * params.amplitude * std::sin(2.0 * phase);
        break;
      }
      case MotionFamily::kJumpForward: {
        const double crouch =
            keyed(u, {{0.0, 0.0}, {0.25, 0.5}, {0.35, 0.1}, {0.65, 0.1}, {0.8, 0.5}, {1.0, 0.0}});
        pose.hip[0] = pose.hip[1] = crouch;
        pose.knee[0] = pose.knee[1] = 2.0 * crouch;
        pose.lean += 0.6 * crouch;
        pose.swing[0] = pose.swing[1] = params.amplitude * (1.5 * crouch - 0.2);
        if (u > 0.35 && u < 0.65) {
          const double w = std::sin(kPi * (u - 0.35) / 0.3);
          pose.lift = 0.3 * params.amplitude * w;
          velocity[i] = {0.0, params.speed * w * w};
        }
        break;
      }
      case MotionFamily::kSitDown: {
        const double bend = 1.1 * params.amplitude * smoothstep((u - 0.2) / 0.6);
        pose.hip[0] = pose.hip[1] = bend;
        pose.knee[0] = pose.knee[1] = 2.0 * bend;
        pose.lean += 0.4 * bend;
        pose.swing[0] = pose.swing[1] = 0.5 * bend;
        break;
      }
    }
    poses.push_back(solve_pose(pose, ids, joints));
  }

  // Root channels and local joint positions; the other channels need world
  // positions first.
  const ChannelLayout layout = ChannelLayout::redundant(joints);
  MotionTensor data = MotionTensor::Zero(frames, layout.width());
  for (int i = 0; i < frames; ++i) {
    data(i, 0) = yaw_rate[i];
    data(i, 1) = velocity[i].x();
    data(i, 2) = velocity[i].y();
    data(i, 3) = poses[i].root_height;
    for (int j = 1; j < joints; ++j) {
      data.row(i).segment<3>(layout.joint_position(j)) = poses[i].local[j].transpose();
    }
    for (int j = 0; j < joints; ++j) {
      data.row(i).segment<6>(layout.joint_rotation(j)) = rotation_to_6d(poses[i].rotation[j]).transpose();
    }
  }
  const GlobalMotion world = to_global(data, joints);
  for (int i = 0; i < frames; ++i) {
    const int a = std::min(i, frames - 2);
    if (frames < 2) break;
    for (int j = 0; j < joints; ++j) {
      const Eigen::Vector3d d = world.position(a + 1, j) - world.position(a, j);
      const Eigen::Vector2d xz = rotate_y(-world.root_yaw[a], {d.x(), d.z()});
      data.row(i).segment<3>(layout.joint_velocity(j)) << xz.x(), d.y(), xz.y();
    }
  }
  if (frames >= 2) {
    const Eigen::MatrixXd contact = derive_foot_contact(world, skeleton);
    for (int k = 0; k < 4; ++k) data.col(layout.foot_contact(k)) = contact.col(k);
  }
  out.motion = Motion(layout, std::move(data));

  switch (family) {
    case MotionFamily::kWalkLine:
      if (params.speed == 0.0) {
        out.prompt = "a person stands still";
      } else {
        out.prompt = params.speed < 0.035 ? "a person walks forward slowly"
                                          : "a person walks forward quickly";
      }
      break;
    case MotionFamily::kWalkCircle:
      out.prompt = std::string("a person walks in a circle to the ") +
                   (params.turn > 0 ? "left" : "right");
      break;
    case MotionFamily::kWalkAndRaiseHand:
      out.prompt = std::string("a person walks forward and raises the ") + side_name(params.hand) +
                   " hand";
      break;
    case MotionFamily::kStandWave:
      out.prompt = std::string("a person waves with the ") + side_name(params.hand) + " hand";
      break;
    case MotionFamily::kJumpForward:
      out.prompt = "a person jumps forward";
      break;
    case MotionFamily::kSitDown:
      out.prompt = "a person sits down";
      break;
  }
  return out;
}

FamilyParams random_params(MotionFamily family, int frames, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 17));
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  FamilyParams p;
  p.frames = frames;
  p.phase = uniform(0.0, 2.0 * kPi);
  p.cadence = uniform(0.3, 0.4);
  p.amplitude = uniform(0.9, 1.1);
  p.hand = std::uniform_int_distribution<int>(0, 1)(rng);
  p.turn = std::uniform_int_distribution<int>(0, 1)(rng) ? 1 : -1;
  switch (family) {
    case MotionFamily::kWalkLine:
      p.speed = uniform(0.0, 1.0) < 0.1 ? 0.0 : uniform(0.015, 0.07);
      break;
    case MotionFamily::kWalkCircle:
      p.speed = uniform(0.02, 0.06);
      p.radius = uniform(1.0, 3.0);
      break;
    case MotionFamily::kWalkAndRaiseHand:
      p.speed = uniform(0.015, 0.05);
      break;
    case MotionFamily::kJumpForward:
      p.speed = uniform(0.05, 0.12);
      break;
    case MotionFamily::kStandWave:
    case MotionFamily::kSitDown:
      p.speed = 0.0;
      break;
  }
  return p;
}

std::vector<MotionTensor> Dataset::train_tensors() const {
  std::vector<MotionTensor> out;
  out.reserve(train.size());
  for (const auto& s : train) out.push_back(s.motion.data());
  return out;
}

namespace {

double fit_position_scale(const std::vector<DatasetSample>& train, const Skeleton& skeleton) {
  double sq = 0.0;
  long n = 0;
  for (const auto& s : train) {
    const GlobalMotion g = to_global(s.motion, skeleton);
    for (int f = 0; f < g.frames(); ++f) {
      for (int joint : skeleton.controllable_joints) {
        sq += g.position(f, joint).squaredNorm();
        n += 3;
      }
    }
  }
  return n > 0 ? std::max(std::sqrt(sq / static_cast<double>(n)), 1e-3) : 1.0;
}

}  // namespace

Dataset build_dataset(int size, std::uint64_t split_seed, int frames, double train_fraction) {
  if (size < 2) throw DataError("dataset needs at least 2 samples");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  Dataset ds;
  ds.frames = frames;
  ds.split_seed = split_seed;
  std::vector<DatasetSample> all;
  all.reserve(size);
  for (int i = 0; i < size; ++i) {
    const auto family = static_cast<MotionFamily>(i % kMotionFamilyCount);
    const std::uint64_t seed = mix_seed(split_seed, static_cast<std::uint64_t>(i));
    DatasetSample s = generate_sample(family, random_params(family, frames, seed), seed, ds.skeleton);
    s.id = i;
    all.push_back(std::move(s));
  }
  std::vector<int> order(size);
  for (int i = 0; i < size; ++i) order[i] = i;
  Rng rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_train = std::clamp(static_cast<int>(std::lround(size * train_fraction)), 1, size - 1);
  for (int k = 0; k < size; ++k) {
    auto& dst = k < n_train ? ds.train : ds.test;
    dst.push_back(std::move(all[order[k]]));
  }
  auto by_id = [](const DatasetSample& a, const DatasetSample& b) { return a.id < b.id; };
  std::sort(ds.train.begin(), ds.train.end(), by_id);
  std::sort(ds.test.begin(), ds.test.end(), by_id);
  ds.normalizer = Normalizer::fit(ds.train_tensors());
  ds.normalizer.position_scale = fit_position_scale(ds.train, ds.skeleton);
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(directory) / "motions");
  nlohmann::json samples = nlohmann::json::array();
  auto emit = [&](const DatasetSample& s, const char* split) {
    nlohmann::json m = motion_to_json(s.motion, dataset.fps, dataset.skeleton.name);
    m["prompt"] = s.prompt;
    write_json_file((fs::path(directory) / "motions" / (std::to_string(s.id) + ".json")).string(), m);
    samples.push_back({{"id", s.id},
                       {"split", split},
                       {"family", to_string(s.family)},
                       {"prompt", s.prompt},
                       {"seed", s.seed},
                       {"params", s.params.to_json()}});
  };
  for (const auto& s : dataset.train) emit(s, "train");
  for (const auto& s : dataset.test) emit(s, "test");
  nlohmann::json manifest = {{"frames", dataset.frames},
                             {"fps", dataset.fps},
                             {"split_seed", dataset.split_seed},
                             {"skeleton", dataset.skeleton.name},
                             {"normalizer", dataset.normalizer.to_json()},
                             {"samples", samples}};
  write_json_file((fs::path(directory) / "manifest.json").string(), manifest);
}

Dataset load_dataset(const std::string& directory) {
  namespace fs = std::filesystem;
  const nlohmann::json manifest = read_json_file((fs::path(directory) / "manifest.json").string());
  Dataset ds;
  ds.frames = manifest.at("frames");
  ds.fps = manifest.at("fps");
  ds.split_seed = manifest.at("split_seed");
  if (manifest.at("skeleton") != ds.skeleton.name) throw DataError("unsupported skeleton");
  ds.normalizer = Normalizer::from_json(manifest.at("normalizer"));
  for (const auto& entry : manifest.at("samples")) {
    DatasetSample s;
    s.id = entry.at("id");
    s.family = family_from_string(entry.at("family"));
    s.prompt = entry.at("prompt");
    s.seed = entry.at("seed");
    s.params = FamilyParams::from_json(entry.at("params"));
    s.motion = motion_from_json(
        read_json_file((fs::path(directory) / "motions" / (std::to_string(s.id) + ".json")).string()));
    (entry.at("split") == "train" ? ds.train : ds.test).push_back(std::move(s));
  }
  return ds;
}

}  // namespace trajmotion
