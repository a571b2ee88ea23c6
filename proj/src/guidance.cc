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

#include "trajmotion/guidance.h"

#include <cmath>
#include <iostream>
#include <limits>
#include <ostream>

#include "trajmotion/errors.h"
#include "trajmotion/lbfgs.h"

namespace trajmotion {

const char* to_string(GuidanceOptimizer optimizer) {
  return optimizer == GuidanceOptimizer::kSgd ? "sgd" : "lbfgs";
}

GuidanceOptimizer optimizer_from_string(const std::string& name) {
  if (name == "sgd") return GuidanceOptimizer::kSgd;
  if (name == "lbfgs") return GuidanceOptimizer::kLbfgs;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void GuidancePhase::validate() const {
  if (iterations < 1) throw ConfigError("guidance phase needs at least one iteration");
  if (!(learning_rate > 0.0)) throw ConfigError("guidance learning rate must be positive");
  if (last_step < 1 || first_step < last_step) throw ConfigError("invalid guidance step range");
}

GuidanceSchedule make_guidance_schedule(int total_steps) {
  if (total_steps < 20) throw ConfigError("guidance schedule needs T >= 20");
  const int fine = std::max(10, static_cast<int>(std::lround(total_steps / 100.0)));
  return {
      {total_steps, fine + 1, 10, 0.5, GuidanceOptimizer::kLbfgs},
      {fine, 1, 100, 0.1, GuidanceOptimizer::kLbfgs},
  };
}

GuidanceSchedule make_flat_schedule(int total_steps, GuidanceOptimizer optimizer, int iterations,
                                    double learning_rate) {
  GuidancePhase phase{total_steps, 1, iterations, learning_rate, optimizer};
  phase.validate();
  return {phase};
}

const GuidancePhase& phase_for_step(const GuidanceSchedule& schedule, int t) {
  for (const auto& phase : schedule) {
    if (phase.contains(t)) return phase;
  }
  throw StepError("no guidance phase covers step " + std::to_string(t));
}

namespace {

void check_spec(const MotionTensor& motion, const TrajectorySpec& spec, int joint_count) {
  if (spec.frames() != motion.rows() || spec.joint_count() != joint_count) {
    throw TensorError("trajectory spec does not match the motion shape");
  }
}

}  // namespace

double control_objective(const MotionTensor& motion, const TrajectorySpec& spec,
                         int joint_count, MotionTensor* grad) {
  check_spec(motion, spec, joint_count);
  const int count = spec.masked_count();
  if (grad) grad->setZero(motion.rows(), motion.cols());
  if (count == 0) return 0.0;
  const GlobalMotion g = to_global(motion, joint_count);
  if (!g.positions.allFinite()) throw NumericError("world conversion produced non-finite values");
  double sum = 0.0;
  Eigen::MatrixXd d_pos;
  if (grad) d_pos = Eigen::MatrixXd::Zero(g.positions.rows(), g.positions.cols());
  for (int f = 0; f < spec.frames(); ++f) {
    for (int j = 0; j < joint_count; ++j) {
      if (spec.mask(f, j) == 0.0) continue;
      const Eigen::Vector3d diff = g.position(f, j) - spec.target(f, j);
      sum += diff.squaredNorm();
      if (grad) d_pos.row(f).segment<3>(3 * j) = (2.0 / count) * diff.transpose();
    }
  }
  if (grad) *grad = to_global_backward(motion, joint_count, d_pos);
  return sum / count;
}

double control_objective(const MotionTensor& motion, const TrajectorySpec& spec,
                         const Skeleton& skeleton) {
  return control_objective(motion, spec, skeleton.joint_count(), nullptr);
}

double mean_control_error(const MotionTensor& motion, const TrajectorySpec& spec,
                          int joint_count) {
  check_spec(motion, spec, joint_count);
  const int count = spec.masked_count();
  if (count == 0) return 0.0;
  const GlobalMotion g = to_global(motion, joint_count);
  double sum = 0.0;
  for (int f = 0; f < spec.frames(); ++f) {
    for (int j = 0; j < joint_count; ++j) {
      if (spec.mask(f, j) != 0.0) sum += (g.position(f, j) - spec.target(f, j)).norm();
    }
  }
  return sum / count;
}

GuidanceResult guide_posterior(const MotionTensor& mu, int t, const TrajectorySpec& spec,
                               const GuidancePhase& phase, const Skeleton& skeleton,
                               const Normalizer* normalizer) {
  phase.validate();
  const int joints = skeleton.joint_count();
  check_spec(mu, spec, joints);
  GuidanceResult result;
  result.mu = mu;
  if (!spec.has_constraints()) return result;

  const Eigen::Index rows = mu.rows();
  const Eigen::Index cols = mu.cols();
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(cols);
  if (normalizer) {
    if (normalizer->channels() != cols) throw TensorError("normalizer does not match mu");
    scale = normalizer->std;
  }
  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad_out) {
    const MotionTensor local = Eigen::Map<const MotionTensor>(x.data(), rows, cols);
    const MotionTensor physical = normalizer ? normalizer->denormalize(local) : local;
    MotionTensor grad;
    double value = 0.0;
    try {
      value = control_objective(physical, spec, joints, &grad);
    } catch (const NumericError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    grad.array().rowwise() *= scale.array();
    grad_out = Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
    return value;
  };

  Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(mu.data(), mu.size());
  MinimizeResult min;
  if (phase.optimizer == GuidanceOptimizer::kLbfgs) {
    LbfgsOptions options;
    options.max_iterations = phase.iterations;
    options.learning_rate = phase.learning_rate;
    min = minimize_lbfgs(objective, std::move(x0), options);
  } else {
    min = minimize_gradient_descent(objective, std::move(x0), phase.iterations,
                                    phase.learning_rate);
  }
  result.objective_before = min.initial_value;
  result.objective_after = min.final_value;
  result.iterations = min.iterations;
  result.accepted_values = std::move(min.accepted_values);
  if (min.nonfinite) {
    std::cerr << "guidance: non-finite objective or gradient at step " << t
              << "; leaving the posterior mean unchanged\n";
    result.aborted = true;
    return result;
  }
  result.mu = Eigen::Map<const MotionTensor>(min.x.data(), rows, cols);
  return result;
}

void ErrorTrace::record(int t, double predicted, double guided) {
  steps.push_back(t);
  predicted_error.push_back(predicted);
  guided_error.push_back(guided);
}

double ErrorTraceSummary::mean_predicted_std() const {
  if (predicted_std.empty()) return 0.0;
  double s = 0.0;
  for (double v : predicted_std) s += v;
  return s / static_cast<double>(predicted_std.size());
}

void ErrorTraceSummary::write_csv(std::ostream& out) const {
  out << "step,predicted_mean,predicted_std,guided_mean,guided_std\n";
  out.precision(10);
  for (size_t i = 0; i < steps.size(); ++i) {
    out << steps[i] << ',' << predicted_mean[i] << ',' << predicted_std[i] << ','
        << guided_mean[i] << ',' << guided_std[i] << '\n';
  }
}

ErrorTraceSummary summarize_traces(const std::vector<ErrorTrace>& traces) {
  ErrorTraceSummary s;
  if (traces.empty()) return s;
  s.steps = traces.front().steps;
  const size_t n = s.steps.size();
  for (const auto& tr : traces) {
    if (tr.steps != s.steps) throw TensorError("error traces disagree on their steps");
  }
  auto stats = [&](auto member, std::vector<double>& mean, std::vector<double>& stdev) {
    mean.assign(n, 0.0);
    stdev.assign(n, 0.0);
    const double count = static_cast<double>(traces.size());
    for (size_t i = 0; i < n; ++i) {
      double m = 0.0;
      for (const auto& tr : traces) m += (tr.*member)[i];
      m /= count;
      double v = 0.0;
      for (const auto& tr : traces) v += ((tr.*member)[i] - m) * ((tr.*member)[i] - m);
      mean[i] = m;
      stdev[i] = std::sqrt(v / count);
    }
  };
  stats(&ErrorTrace::predicted_error, s.predicted_mean, s.predicted_std);
  stats(&ErrorTrace::guided_error, s.guided_mean, s.guided_std);
  return s;
}

}  // namespace trajmotion
