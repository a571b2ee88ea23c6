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

// Minimal layers with hand-written reverse passes. Activations are stored
// row-per-token: a batch of B sequences of length S is a (B*S) x width matrix.
// forward() is const and writes what backward() needs into a caller-owned
// cache, so inference on shared weights is reentrant. backward() accumulates
// into Parameter::grad.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajmotion/diffusion.h"

namespace trajmotion::nn {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

using ParameterList = std::vector<Parameter*>;

class Linear {
 public:
  struct Cache {
    Mat input;
  };

  Linear() = default;
  Linear(const std::string& name, int in_features, int out_features, Rng& rng);

  Mat forward(const Mat& x, Cache* cache = nullptr) const;
  Mat backward(const Cache& cache, const Mat& grad_out);
  void collect(ParameterList& out);

  int in_features() const { return static_cast<int>(weight_.value.rows()); }
  int out_features() const { return static_cast<int>(weight_.value.cols()); }

 private:
  Parameter weight_;  // in x out
  Parameter bias_;    // 1 x out
};

class LayerNorm {
 public:
  struct Cache {
    Mat normalized;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int width);

  Mat forward(const Mat& x, Cache* cache = nullptr) const;
  Mat backward(const Cache& cache, const Mat& grad_out);
  void collect(ParameterList& out);

 private:
  Parameter gain_;
  Parameter shift_;
};

// Elementwise activations. *_backward takes the activation's input.
Mat gelu(const Mat& x);
Mat gelu_backward(const Mat& x, const Mat& grad_out);
Mat silu(const Mat& x);
Mat silu_backward(const Mat& x, const Mat& grad_out);

class MultiHeadAttention {
 public:
  struct Cache {
    Linear::Cache qkv_in;
    Mat qkv;
    std::vector<Mat> weights;  // batch * heads attention matrices, S x S
    Linear::Cache out_in;
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, int width, int heads, Rng& rng);

  Mat forward(const Mat& x, int batch, int seq, Cache* cache = nullptr) const;
  Mat backward(const Cache& cache, int batch, int seq, const Mat& grad_out);
  void collect(ParameterList& out);

 private:
  int width_ = 0;
  int heads_ = 0;
  Linear qkv_;
  Linear out_;
};

// Pre-norm encoder block: x + Attn(LN(x)), then x + FF(LN(x)).
class EncoderBlock {
 public:
  struct Cache {
    LayerNorm::Cache ln1;
    MultiHeadAttention::Cache attn;
    LayerNorm::Cache ln2;
    Linear::Cache ff1;
    Mat ff1_out;
    Linear::Cache ff2;
  };

  EncoderBlock() = default;
  EncoderBlock(const std::string& name, int width, int heads, int ff_width, Rng& rng);

  Mat forward(const Mat& x, int batch, int seq, Cache* cache = nullptr) const;
  Mat backward(const Cache& cache, int batch, int seq, const Mat& grad_out);
  void collect(ParameterList& out);

 private:
  LayerNorm ln1_;
  MultiHeadAttention attn_;
  LayerNorm ln2_;
  Linear ff1_;
  Linear ff2_;
};

// Adaptive-moment optimizer over a fixed parameter list.
class Adam {
 public:
  explicit Adam(ParameterList params, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  void zero_grad();
  void step(double learning_rate);
  double grad_norm() const;
  void clip_grad_norm(double max_norm);

 private:
  ParameterList params_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long step_count_ = 0;
};

// Sinusoidal features: rows are positions, columns alternate sin/cos pairs.
Mat sinusoidal_embedding(const Eigen::VectorXd& positions, int width);

}  // namespace trajmotion::nn
