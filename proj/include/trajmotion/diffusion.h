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

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "trajmotion/representation.h"

namespace trajmotion {

using Rng = std::mt19937_64;

MotionTensor standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

struct ScheduleConfig {
  int steps = 100;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  std::string kind = "linear";

  // Linear betas with both endpoints multiplied by 1000/steps, so short
  // chains still end near pure noise. Equals the default at steps = 1000.
  static ScheduleConfig scaled_linear(int steps);
};

// Variance schedule with cumulative coefficients. Step indices run 1..T;
// index 0 denotes clean data (alpha_bar = 1).
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas);
  static NoiseSchedule from_config(const ScheduleConfig& config);
  static NoiseSchedule linear(int steps, double beta_start = 1e-4, double beta_end = 2e-2);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;
  double alpha_bar(int t) const;
  double coef_x0(int t) const;   // sqrt(alpha_bar_t)
  double coef_eps(int t) const;  // sqrt(1 - alpha_bar_t)
  // beta_tilde_t = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t
  double posterior_variance(int t) const;
  double posterior_coef_x0(int t) const;
  double posterior_coef_xt(int t) const;

 private:
  void check_step(int t, int lo) const;

  std::vector<double> betas_;
  std::vector<double> alpha_bar_;  // index 0 holds 1.0
};

// Forward marginal x_t = coef_x0_t * x0 + coef_eps_t * eps.
MotionTensor q_sample(const MotionTensor& x0, int t, const MotionTensor& eps,
                      const NoiseSchedule& schedule);

// Mean of q(x_{t-1} | x_t, x0_hat).
MotionTensor posterior_mean(const MotionTensor& x0_hat, const MotionTensor& x_t, int t,
                            const NoiseSchedule& schedule);

// Inverse of posterior_mean with respect to x0_hat.
MotionTensor x0_from_posterior_mean(const MotionTensor& mu, const MotionTensor& x_t, int t,
                                    const NoiseSchedule& schedule);

struct DiffusionState {
  int t = 0;
  MotionTensor x;
  std::uint64_t rng_seed = 0;
  Rng rng;

  DiffusionState() = default;
  DiffusionState(int step, MotionTensor sample, std::uint64_t seed)
      : t(step), x(std::move(sample)), rng_seed(seed), rng(seed) {}
};

// Replaces the posterior mean before noise is added. Receives the step index
// the mean was computed for.
using GuidanceHook = std::function<MotionTensor(const MotionTensor& mu, int t)>;

// Ancestral DDPM update; returns the state at t - 1. No noise is added on the
// final step (t == 1).
DiffusionState ddpm_step(DiffusionState state, const MotionTensor& x0_hat,
                         const NoiseSchedule& schedule, const GuidanceHook& hook = {});

// Deterministic DDIM update from state.t to t_next (t_next may be 0).
DiffusionState ddim_step(DiffusionState state, const MotionTensor& x0_hat, int t_next,
                         const NoiseSchedule& schedule);

// Evenly spaced descending DDIM timesteps T = t_0 > t_1 > ... > t_{n-1} >= 1.
std::vector<int> ddim_timesteps(int total_steps, int sampling_steps);

}  // namespace trajmotion
