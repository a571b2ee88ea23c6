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

#include "trajmotion/io.h"

#include <fstream>

#include "trajmotion/errors.h"

namespace trajmotion {

nlohmann::json motion_to_json(const Motion& motion, int fps, const std::string& skeleton_name) {
  const ChannelLayout& layout = motion.layout();
  const int joints = layout.joint_count();
  nlohmann::json ch;
  std::vector<double> r_a, r_y;
  nlohmann::json r_xz = nlohmann::json::array();
  nlohmann::json j_p = nlohmann::json::array();
  nlohmann::json j_r = nlohmann::json::array();
  nlohmann::json j_v = nlohmann::json::array();
  nlohmann::json c_f = nlohmann::json::array();
  const MotionTensor& d = motion.data();
  for (int f = 0; f < motion.frames(); ++f) {
    r_a.push_back(d(f, 0));
    r_xz.push_back({d(f, 1), d(f, 2)});
    r_y.push_back(d(f, 3));
    nlohmann::json pos = nlohmann::json::array();
    for (int j = 1; j < joints; ++j) {
      const int c = layout.joint_position(j);
      pos.push_back({d(f, c), d(f, c + 1), d(f, c + 2)});
    }
    j_p.push_back(pos);
    if (layout.has_rotations()) {
      nlohmann::json rot = nlohmann::json::array();
      for (int j = 0; j < joints; ++j) {
        const int c = layout.joint_rotation(j);
        rot.push_back(std::vector<double>{d(f, c), d(f, c + 1), d(f, c + 2), d(f, c + 3),
                                          d(f, c + 4), d(f, c + 5)});
      }
      j_r.push_back(rot);
    }
    if (layout.has_velocities()) {
      nlohmann::json vel = nlohmann::json::array();
      for (int j = 0; j < joints; ++j) {
        const int c = layout.joint_velocity(j);
        vel.push_back({d(f, c), d(f, c + 1), d(f, c + 2)});
      }
      j_v.push_back(vel);
    }
    if (layout.has_contacts()) {
      c_f.push_back({d(f, layout.foot_contact(0)), d(f, layout.foot_contact(1)),
                     d(f, layout.foot_contact(2)), d(f, layout.foot_contact(3))});
    }
  }
  ch["r_a"] = r_a;
  ch["r_xz"] = r_xz;
  ch["r_y"] = r_y;
  ch["j_p"] = j_p;
  if (layout.has_rotations()) ch["j_r"] = j_r;
  if (layout.has_velocities()) ch["j_v"] = j_v;
  if (layout.has_contacts()) ch["c_f"] = c_f;
  return {{"fps", fps},
          {"skeleton", skeleton_name},
          {"layout", to_string(layout.kind())},
          {"joint_count", joints},
          {"channels", ch}};
}

Motion motion_from_json(const nlohmann::json& j) {
  try {
    const auto& ch = j.at("channels");
    MotionChannels m;
    m.r_a = ch.at("r_a").get<std::vector<double>>();
    for (const auto& v : ch.at("r_xz")) m.r_xz.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    m.r_y = ch.at("r_y").get<std::vector<double>>();
    for (const auto& frame : ch.at("j_p")) {
      std::vector<Eigen::Vector3d> row;
      for (const auto& v : frame) row.emplace_back(v.at(0), v.at(1), v.at(2));
      m.j_p.push_back(std::move(row));
    }
    if (ch.contains("j_r")) {
      for (const auto& frame : ch.at("j_r")) {
        std::vector<Eigen::Matrix<double, 6, 1>> row;
        for (const auto& v : frame) {
          Eigen::Matrix<double, 6, 1> r;
          for (int k = 0; k < 6; ++k) r[k] = v.at(k).get<double>();
          row.push_back(r);
        }
        m.j_r.push_back(std::move(row));
      }
    }
    if (ch.contains("j_v")) {
      for (const auto& frame : ch.at("j_v")) {
        std::vector<Eigen::Vector3d> row;
        for (const auto& v : frame) row.emplace_back(v.at(0), v.at(1), v.at(2));
        m.j_v.push_back(std::move(row));
      }
    }
    if (ch.contains("c_f")) {
      for (const auto& v : ch.at("c_f")) {
        m.c_f.push_back({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>(),
                         v.at(3).get<double>()});
      }
    }
    int joints = j.value("joint_count", 0);
    if (joints == 0) {
      if (m.j_p.empty()) throw RepresentationError("cannot infer joint count from an empty motion");
      joints = static_cast<int>(m.j_p.front().size()) + 1;
    }
    return Motion::from_channels(m, joints);
  } catch (const nlohmann::json::exception& e) {
    throw RepresentationError(std::string("malformed motion JSON: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

}  // namespace trajmotion
