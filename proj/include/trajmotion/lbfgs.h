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

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace trajmotion {

// Returns f(x) and writes the gradient into `grad` (already sized).
using DifferentiableObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int max_iterations = 10;
  double learning_rate = 1.0;
  int history = 10;
  double tolerance_grad = 1e-12;
  double tolerance_change = 1e-18;
  int max_backtracks = 30;
  double armijo = 1e-4;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double initial_value = 0.0;
  double final_value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool nonfinite = false;  // the objective or gradient was non-finite at x0
  // Objective after every accepted step, starting with the initial value.
  std::vector<double> accepted_values;
};

// Limited-memory BFGS with a fixed trial step (scaled by 1/|g|_1 on the first
// iteration) and Armijo backtracking. A step is accepted only when it
// decreases the objective sufficiently, so accepted values never increase.
MinimizeResult minimize_lbfgs(const DifferentiableObjective& objective, Eigen::VectorXd x0,
                              const LbfgsOptions& options);

// Plain gradient descent with a fixed step; no acceptance test.
MinimizeResult minimize_gradient_descent(const DifferentiableObjective& objective,
                                         Eigen::VectorXd x0, int iterations,
                                         double learning_rate);

}  // namespace trajmotion
