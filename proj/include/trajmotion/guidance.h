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

#include <iosfwd>
#include <string>
#include <vector>

#include "trajmotion/normalizer.h"
#include "trajmotion/representation.h"
#include "trajmotion/trajectory.h"

namespace trajmotion {

enum class GuidanceOptimizer { kSgd, kLbfgs };

const char* to_string(GuidanceOptimizer optimizer);
GuidanceOptimizer optimizer_from_string(const std::string& name);

// Optimizer settings applied on denoising steps first_step down to last_step
// (inclusive, first_step >= last_step).
struct GuidancePhase {
  int first_step = 1;
  int last_step = 1;
  int iterations = 10;
  double learning_rate = 0.5;
  GuidanceOptimizer optimizer = GuidanceOptimizer::kLbfgs;

  bool contains(int t) const { return t <= first_step && t >= last_step; }
  void validate() const;
};

using GuidanceSchedule = std::vector<GuidancePhase>;

// Coarse-to-fine L-BFGS schedule: 10 iterations at lr 0.5 on steps
// T..fine+1, then 100 iterations at lr 0.1 on steps fine..1, where
// fine = max(10, round(T / 100)). Requires T >= 20.
GuidanceSchedule make_guidance_schedule(int total_steps);

// One phase covering every step (used for the fixed-budget SGD ablation).
GuidanceSchedule make_flat_schedule(int total_steps, GuidanceOptimizer optimizer, int iterations,
                                    double learning_rate);

const GuidancePhase& phase_for_step(const GuidanceSchedule& schedule, int t);

// Mean squared world-frame distance over masked joint-frames; 0 for an
// empty mask. `motion` is in physical units and any representation whose
// column prefix holds the root and joint-position channels.
double control_objective(const MotionTensor& motion, const TrajectorySpec& spec,
                         const Skeleton& skeleton);

// Same value; when `grad` is non-null it receives d(objective)/d(motion).
double control_objective(const MotionTensor& motion, const TrajectorySpec& spec,
                         int joint_count, MotionTensor* grad);

// Mean Euclidean distance (meters) over masked joint-frames.
double mean_control_error(const MotionTensor& motion, const TrajectorySpec& spec,
                          int joint_count);

struct GuidanceResult {
  MotionTensor mu;
  double objective_before = 0.0;
  double objective_after = 0.0;
  int iterations = 0;
  bool aborted = false;  // non-finite objective or gradient; mu is the input
  std::vector<double> accepted_values;
};

// Refines a posterior mean by minimizing control_objective. When
// `normalizer` is given, `mu` lives in normalized units and is mapped back to
// physical units before conversion. Gradients reach only the channels the
// world conversion reads.
GuidanceResult guide_posterior(const MotionTensor& mu, int t, const TrajectorySpec& spec,
                               const GuidancePhase& phase, const Skeleton& skeleton,
                               const Normalizer* normalizer = nullptr);

// Per-sample control error across denoising steps, recorded in sampling
// order (t = T first).
struct ErrorTrace {
  std::vector<int> steps;
  std::vector<double> predicted_error;  // x0 estimate before guidance
  std::vector<double> guided_error;     // refined posterior mean

  void record(int t, double predicted, double guided);
  size_t size() const { return steps.size(); }
};

struct ErrorTraceSummary {
  std::vector<int> steps;
  std::vector<double> predicted_mean;
  std::vector<double> predicted_std;
  std::vector<double> guided_mean;
  std::vector<double> guided_std;

  double mean_predicted_std() const;
  // Columns: step, predicted_mean, predicted_std, guided_mean, guided_std.
  void write_csv(std::ostream& out) const;
};

// Population mean/std across samples at each step; all traces must share
// their step sequence.
ErrorTraceSummary summarize_traces(const std::vector<ErrorTrace>& traces);

}  // namespace trajmotion
