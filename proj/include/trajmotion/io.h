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

#include <nlohmann/json.hpp>

#include "trajmotion/representation.h"

namespace trajmotion {

// {"fps": int, "skeleton": name, "layout": kind, "channels": {"r_a": [...],
//  "r_xz": [[x, z], ...], "r_y": [...], "j_p": [[[x, y, z] x (j-1)], ...],
//  "j_r": ..., "j_v": ..., "c_f": ...}}. Optional channels are present only
// for layouts that carry them.
nlohmann::json motion_to_json(const Motion& motion, int fps, const std::string& skeleton_name);
Motion motion_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace trajmotion
