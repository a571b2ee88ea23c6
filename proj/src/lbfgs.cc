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

#include "trajmotion/lbfgs.h"

#include <cmath>
#include <deque>

namespace trajmotion {

MinimizeResult minimize_lbfgs(const DifferentiableObjective& objective, Eigen::VectorXd x0,
                              const LbfgsOptions& options) {
  MinimizeResult result;
  const Eigen::Index n = x0.size();
  Eigen::VectorXd g(n);
  double f = objective(x0, g);
  result.evaluations = 1;
  result.initial_value = f;
  result.x = std::move(x0);
  result.final_value = f;
  if (!std::isfinite(f) || !g.allFinite()) {
    result.nonfinite = true;
    return result;
  }
  result.accepted_values.push_back(f);

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd g_new(n);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.cwiseAbs().maxCoeff() <= options.tolerance_grad) break;

    // Two-loop recursion for d = -H g.
    Eigen::VectorXd q = -g;
    const size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd d = std::move(q);

    double step = options.learning_rate;
    if (iter == 0) step *= std::min(1.0, 1.0 / g.cwiseAbs().sum());
    const double gtd = g.dot(d);
    if (!(gtd < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
    }
    const double slope = g.dot(d);
    if (-slope <= options.tolerance_change) break;

    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = f;
    for (int k = 0; k <= options.max_backtracks; ++k) {
      x_new = result.x + step * d;
      f_new = objective(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= f + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd s = x_new - result.x;
    Eigen::VectorXd y = g_new - g;
    const double ys = y.dot(s);
    if (ys > 1e-12) {
      if (static_cast<int>(s_hist.size()) == options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / ys);
    }
    const double change = f - f_new;
    result.x = std::move(x_new);
    f = f_new;
    g = g_new;
    result.final_value = f;
    result.accepted_values.push_back(f);
    ++result.iterations;
    if (change <= options.tolerance_change) break;
  }
  return result;
}

MinimizeResult minimize_gradient_descent(const DifferentiableObjective& objective,
                                         Eigen::VectorXd x0, int iterations,
                                         double learning_rate) {
  MinimizeResult result;
  Eigen::VectorXd g(x0.size());
  result.x = std::move(x0);
  double f = objective(result.x, g);
  result.evaluations = 1;
  result.initial_value = f;
  result.final_value = f;
  if (!std::isfinite(f) || !g.allFinite()) {
    result.nonfinite = true;
    return result;
  }
  result.accepted_values.push_back(f);
  for (int i = 0; i < iterations; ++i) {
    Eigen::VectorXd x_new = result.x - learning_rate * g;
    Eigen::VectorXd g_new(g.size());
    const double f_new = objective(x_new, g_new);
    ++result.evaluations;
    if (!std::isfinite(f_new) || !g_new.allFinite()) break;
    result.x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
    result.final_value = f;
    result.accepted_values.push_back(f);
    ++result.iterations;
  }
  return result;
}

}  // namespace trajmotion
