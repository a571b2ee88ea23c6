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

#include "trajmotion/diffusion.h"

#include <algorithm>
#include <cmath>

#include "trajmotion/errors.h"

namespace trajmotion {

MotionTensor standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MotionTensor out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
  }
  return out;
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw ConfigError("noise schedule needs at least one step");
  alpha_bar_.resize(betas_.size() + 1);
  alpha_bar_[0] = 1.0;
  for (size_t i = 0; i < betas_.size(); ++i) {
    const double b = betas_[i];
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("beta must lie in (0, 1)");
    alpha_bar_[i + 1] = alpha_bar_[i] * (1.0 - b);
  }
  for (int t = 1; t <= steps(); ++t) {
    const double a = coef_x0(t);
    const double s = coef_eps(t);
    if (std::abs(a * a + s * s - 1.0) > 1e-9) {
      throw NumericError("schedule coefficients violate alpha^2 + sigma^2 = 1");
    }
  }
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ConfigError("schedule needs T >= 1");
  std::vector<double> betas(steps);
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[i] = beta_start + frac * (beta_end - beta_start);
  }
  return NoiseSchedule(std::move(betas));
}

ScheduleConfig ScheduleConfig::scaled_linear(int steps) {
  if (steps < 1) throw ConfigError("schedule needs T >= 1");
  ScheduleConfig c;
  c.steps = steps;
  const double scale = 1000.0 / steps;
  c.beta_end = std::min(c.beta_end * scale, 0.999);
  c.beta_start = std::min(c.beta_start * scale, c.beta_end);
  return c;
}

NoiseSchedule NoiseSchedule::from_config(const ScheduleConfig& config) {
  if (config.kind != "linear") throw ConfigError("unknown schedule kind '" + config.kind + "'");
  return linear(config.steps, config.beta_start, config.beta_end);
}

void NoiseSchedule::check_step(int t, int lo) const {
  if (t < lo || t > steps()) {
    throw StepError("step " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(steps()) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_step(t, 1);
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_step(t, 0);
  return alpha_bar_[t];
}

double NoiseSchedule::coef_x0(int t) const { return std::sqrt(alpha_bar(t)); }

double NoiseSchedule::coef_eps(int t) const { return std::sqrt(1.0 - alpha_bar(t)); }

double NoiseSchedule::posterior_variance(int t) const {
  check_step(t, 1);
  return (1.0 - alpha_bar_[t - 1]) / (1.0 - alpha_bar_[t]) * betas_[t - 1];
}

double NoiseSchedule::posterior_coef_x0(int t) const {
  check_step(t, 1);
  return std::sqrt(alpha_bar_[t - 1]) * betas_[t - 1] / (1.0 - alpha_bar_[t]);
}

double NoiseSchedule::posterior_coef_xt(int t) const {
  check_step(t, 1);
  return std::sqrt(1.0 - betas_[t - 1]) * (1.0 - alpha_bar_[t - 1]) / (1.0 - alpha_bar_[t]);
}

namespace {

void check_same_shape(const MotionTensor& a, const MotionTensor& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw TensorError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) +
                      "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()) + ")");
  }
}

}  // namespace

MotionTensor q_sample(const MotionTensor& x0, int t, const MotionTensor& eps,
                      const NoiseSchedule& schedule) {
  check_same_shape(x0, eps, "q_sample");
  if (t < 1 || t > schedule.steps()) throw StepError("q_sample step out of range");
  return schedule.coef_x0(t) * x0 + schedule.coef_eps(t) * eps;
}

MotionTensor posterior_mean(const MotionTensor& x0_hat, const MotionTensor& x_t, int t,
                            const NoiseSchedule& schedule) {
  check_same_shape(x0_hat, x_t, "posterior_mean");
  if (t < 1) throw StepError("posterior mean needs t >= 1");
  return schedule.posterior_coef_x0(t) * x0_hat + schedule.posterior_coef_xt(t) * x_t;
}

MotionTensor x0_from_posterior_mean(const MotionTensor& mu, const MotionTensor& x_t, int t,
                                    const NoiseSchedule& schedule) {
  check_same_shape(mu, x_t, "x0_from_posterior_mean");
  return (mu - schedule.posterior_coef_xt(t) * x_t) / schedule.posterior_coef_x0(t);
}

DiffusionState ddpm_step(DiffusionState state, const MotionTensor& x0_hat,
                         const NoiseSchedule& schedule, const GuidanceHook& hook) {
  if (state.t < 1) throw StepError("ddpm_step needs t >= 1");
  MotionTensor mu = posterior_mean(x0_hat, state.x, state.t, schedule);
  if (hook) {
    mu = hook(mu, state.t);
    if (!mu.allFinite()) {
      throw DivergenceError("posterior mean is non-finite after guidance at step " +
                            std::to_string(state.t));
    }
  }
  if (state.t > 1) {
    const double sigma = std::sqrt(schedule.posterior_variance(state.t));
    mu += sigma * standard_normal(mu.rows(), mu.cols(), state.rng);
  }
  state.x = std::move(mu);
  state.t -= 1;
  return state;
}

DiffusionState ddim_step(DiffusionState state, const MotionTensor& x0_hat, int t_next,
                         const NoiseSchedule& schedule) {
  if (t_next >= state.t || t_next < 0) throw StepError("ddim_step needs 0 <= t_next < t");
  check_same_shape(x0_hat, state.x, "ddim_step");
  const double sigma_t = schedule.coef_eps(state.t);
  if (sigma_t == 0.0) throw StepError("ddim_step: coef_eps is zero at step " + std::to_string(state.t));
  const MotionTensor eps_hat = (state.x - schedule.coef_x0(state.t) * x0_hat) / sigma_t;
  state.x = schedule.coef_x0(t_next) * x0_hat + schedule.coef_eps(t_next) * eps_hat;
  state.t = t_next;
  return state;
}

std::vector<int> ddim_timesteps(int total_steps, int sampling_steps) {
  if (sampling_steps < 1 || sampling_steps > total_steps) {
    throw ConfigError("DDIM step count must lie in [1, T]");
  }
  std::vector<int> ts;
  ts.reserve(sampling_steps);
  for (int k = sampling_steps; k >= 1; --k) {
    const int t = static_cast<int>(
        std::lround(static_cast<double>(k) * total_steps / sampling_steps));
    if (ts.empty() || t < ts.back()) ts.push_back(std::max(t, 1));
  }
  return ts;
}

}  // namespace trajmotion
