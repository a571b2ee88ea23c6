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

#include "trajmotion/nn.h"

#include <cmath>

#include "trajmotion/errors.h"

namespace trajmotion::nn {
namespace {

Parameter make_param(const std::string& name, Mat value) {
  Parameter p;
  p.name = name;
  p.value = std::move(value);
  p.zero_grad();
  return p;
}

Mat xavier(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = u(rng);
  }
  return m;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

}  // namespace

Linear::Linear(const std::string& name, int in_features, int out_features, Rng& rng)
    : weight_(make_param(name + ".weight", xavier(in_features, out_features, rng))),
      bias_(make_param(name + ".bias", Mat::Zero(1, out_features))) {}

Mat Linear::forward(const Mat& x, Cache* cache) const {
  if (x.cols() != weight_.value.rows()) {
    throw TensorError(weight_.name + ": expected " + std::to_string(weight_.value.rows()) +
                      " input features, got " + std::to_string(x.cols()));
  }
  if (cache) cache->input = x;
  Mat y = x * weight_.value;
  y.rowwise() += bias_.value.row(0);
  return y;
}

Mat Linear::backward(const Cache& cache, const Mat& grad_out) {
  weight_.grad.noalias() += cache.input.transpose() * grad_out;
  bias_.grad += grad_out.colwise().sum();
  return grad_out * weight_.value.transpose();
}

void Linear::collect(ParameterList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

LayerNorm::LayerNorm(const std::string& name, int width)
    : gain_(make_param(name + ".gain", Mat::Ones(1, width))),
      shift_(make_param(name + ".shift", Mat::Zero(1, width))) {}

Mat LayerNorm::forward(const Mat& x, Cache* cache) const {
  constexpr double kEps = 1e-5;
  const Eigen::Index n = x.cols();
  Eigen::VectorXd mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(n)) + kEps).rsqrt();
  Mat normalized = centered.array().colwise() * inv_std.array();
  Mat y = normalized.array().rowwise() * gain_.value.row(0).array();
  y.rowwise() += shift_.value.row(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Mat LayerNorm::backward(const Cache& cache, const Mat& grad_out) {
  const double n = static_cast<double>(grad_out.cols());
  gain_.grad += (grad_out.array() * cache.normalized.array()).colwise().sum().matrix();
  shift_.grad += grad_out.colwise().sum();
  Mat g = grad_out.array().rowwise() * gain_.value.row(0).array();
  Eigen::VectorXd mean_g = g.rowwise().sum() / n;
  Eigen::VectorXd mean_gx = (g.array() * cache.normalized.array()).rowwise().sum() / n;
  Mat dx = g.colwise() - mean_g;
  dx -= (cache.normalized.array().colwise() * mean_gx.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

void LayerNorm::collect(ParameterList& out) {
  out.push_back(&gain_);
  out.push_back(&shift_);
}

Mat gelu(const Mat& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + 0.044715 * v * v * v)));
  });
}

Mat gelu_backward(const Mat& x, const Mat& grad_out) {
  Mat d = x.unaryExpr([](double v) {
    const double u = kGeluC * (v + 0.044715 * v * v * v);
    const double th = std::tanh(u);
    const double du = kGeluC * (1.0 + 3.0 * 0.044715 * v * v);
    return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
  });
  return d.cwiseProduct(grad_out);
}

Mat silu(const Mat& x) {
  return x.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}

Mat silu_backward(const Mat& x, const Mat& grad_out) {
  Mat d = x.unaryExpr([](double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return s * (1.0 + v * (1.0 - s));
  });
  return d.cwiseProduct(grad_out);
}

MultiHeadAttention::MultiHeadAttention(const std::string& name, int width, int heads, Rng& rng)
    : width_(width),
      heads_(heads),
      qkv_(name + ".qkv", width, 3 * width, rng),
      out_(name + ".out", width, width, rng) {
  if (heads < 1 || width % heads != 0) throw ConfigError("width must be divisible by heads");
}

Mat MultiHeadAttention::forward(const Mat& x, int batch, int seq, Cache* cache) const {
  const int dh = width_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat qkv = qkv_.forward(x, cache ? &cache->qkv_in : nullptr);
  Mat attended(x.rows(), width_);
  if (cache) cache->weights.resize(static_cast<size_t>(batch) * heads_);
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const auto q = qkv.block(b * seq, h * dh, seq, dh);
      const auto k = qkv.block(b * seq, width_ + h * dh, seq, dh);
      const auto v = qkv.block(b * seq, 2 * width_ + h * dh, seq, dh);
      Mat scores = (q * k.transpose()) * scale;
      Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
      scores = (scores.colwise() - row_max).array().exp();
      Eigen::VectorXd row_sum = scores.rowwise().sum();
      scores = scores.array().colwise() / row_sum.array();
      attended.block(b * seq, h * dh, seq, dh).noalias() = scores * v;
      if (cache) cache->weights[static_cast<size_t>(b) * heads_ + h] = std::move(scores);
    }
  }
  if (cache) cache->qkv = std::move(qkv);
  return out_.forward(attended, cache ? &cache->out_in : nullptr);
}

Mat MultiHeadAttention::backward(const Cache& cache, int batch, int seq, const Mat& grad_out) {
  const int dh = width_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat d_attended = out_.backward(cache.out_in, grad_out);
  Mat d_qkv = Mat::Zero(cache.qkv.rows(), cache.qkv.cols());
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const Mat& a = cache.weights[static_cast<size_t>(b) * heads_ + h];
      const auto q = cache.qkv.block(b * seq, h * dh, seq, dh);
      const auto k = cache.qkv.block(b * seq, width_ + h * dh, seq, dh);
      const auto v = cache.qkv.block(b * seq, 2 * width_ + h * dh, seq, dh);
      const auto d_o = d_attended.block(b * seq, h * dh, seq, dh);
      Mat d_a = d_o * v.transpose();
      d_qkv.block(b * seq, 2 * width_ + h * dh, seq, dh).noalias() = a.transpose() * d_o;
      Eigen::VectorXd dot = (d_a.array() * a.array()).rowwise().sum();
      Mat d_s = (a.array() * (d_a.colwise() - dot).array()).matrix() * scale;
      d_qkv.block(b * seq, h * dh, seq, dh).noalias() = d_s * k;
      d_qkv.block(b * seq, width_ + h * dh, seq, dh).noalias() = d_s.transpose() * q;
    }
  }
  return qkv_.backward(cache.qkv_in, d_qkv);
}

void MultiHeadAttention::collect(ParameterList& out) {
  qkv_.collect(out);
  out_.collect(out);
}

EncoderBlock::EncoderBlock(const std::string& name, int width, int heads, int ff_width, Rng& rng)
    : ln1_(name + ".ln1", width),
      attn_(name + ".attn", width, heads, rng),
      ln2_(name + ".ln2", width),
      ff1_(name + ".ff1", width, ff_width, rng),
      ff2_(name + ".ff2", ff_width, width, rng) {}

Mat EncoderBlock::forward(const Mat& x, int batch, int seq, Cache* cache) const {
  Mat h = attn_.forward(ln1_.forward(x, cache ? &cache->ln1 : nullptr), batch, seq,
                        cache ? &cache->attn : nullptr);
  Mat x2 = x + h;
  Mat f1 = ff1_.forward(ln2_.forward(x2, cache ? &cache->ln2 : nullptr),
                        cache ? &cache->ff1 : nullptr);
  Mat f2 = ff2_.forward(gelu(f1), cache ? &cache->ff2 : nullptr);
  if (cache) cache->ff1_out = std::move(f1);
  return x2 + f2;
}

Mat EncoderBlock::backward(const Cache& cache, int batch, int seq, const Mat& grad_out) {
  Mat d_f1 = gelu_backward(cache.ff1_out, ff2_.backward(cache.ff2, grad_out));
  Mat d_x2 = grad_out + ln2_.backward(cache.ln2, ff1_.backward(cache.ff1, d_f1));
  return d_x2 + ln1_.backward(cache.ln1, attn_.backward(cache.attn, batch, seq, d_x2));
}

void EncoderBlock::collect(ParameterList& out) {
  ln1_.collect(out);
  attn_.collect(out);
  ln2_.collect(out);
  ff1_.collect(out);
  ff2_.collect(out);
}

Adam::Adam(ParameterList params, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const Parameter* p : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

double Adam::grad_norm() const {
  double sq = 0.0;
  for (const Parameter* p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void Adam::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params_) p->grad *= s;
  }
}

void Adam::step(double learning_rate) {
  ++step_count_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= learning_rate * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + epsilon_);
  }
}

Mat sinusoidal_embedding(const Eigen::VectorXd& positions, int width) {
  Mat out(positions.size(), width);
  const int half = width / 2;
  for (Eigen::Index r = 0; r < positions.size(); ++r) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / std::max(half, 1));
      out(r, 2 * i) = std::sin(positions[r] * freq);
      out(r, 2 * i + 1) = std::cos(positions[r] * freq);
    }
    if (width % 2) out(r, width - 1) = 0.0;
  }
  return out;
}

}  // namespace trajmotion::nn
