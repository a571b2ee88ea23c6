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

#include "trajmotion/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "trajmotion/diffusion.h"
#include "trajmotion/errors.h"

namespace trajmotion {
namespace {

void check_batch(const std::vector<GlobalMotion>& generated,
                 const std::vector<TrajectorySpec>& specs) {
  if (generated.empty()) throw DataError("metrics need a nonempty batch");
  if (generated.size() != specs.size()) throw DataError("generated and spec batches differ in size");
}

}  // namespace

std::vector<double> keyframe_errors(const GlobalMotion& generated, const TrajectorySpec& spec) {
  if (generated.frames() != spec.frames() || generated.joint_count() != spec.joint_count()) {
    throw TensorError("generated motion does not match the trajectory spec");
  }
  std::vector<double> out;
  for (int f = 0; f < spec.frames(); ++f) {
    for (int j = 0; j < spec.joint_count(); ++j) {
      if (spec.mask(f, j) != 0.0) out.push_back((generated.position(f, j) - spec.target(f, j)).norm());
    }
  }
  return out;
}

double trajectory_error(const std::vector<GlobalMotion>& generated,
                        const std::vector<TrajectorySpec>& specs, double threshold) {
  check_batch(generated, specs);
  int failed = 0;
  for (size_t i = 0; i < generated.size(); ++i) {
    const auto errors = keyframe_errors(generated[i], specs[i]);
    if (std::any_of(errors.begin(), errors.end(), [&](double e) { return e > threshold; })) ++failed;
  }
  return 100.0 * failed / static_cast<double>(generated.size());
}

double location_error(const std::vector<GlobalMotion>& generated,
                      const std::vector<TrajectorySpec>& specs, double threshold) {
  check_batch(generated, specs);
  long total = 0, missed = 0;
  for (size_t i = 0; i < generated.size(); ++i) {
    for (double e : keyframe_errors(generated[i], specs[i])) {
      ++total;
      if (e > threshold) ++missed;
    }
  }
  if (total == 0) throw DataError("no masked keyframes in the batch");
  return 100.0 * static_cast<double>(missed) / static_cast<double>(total);
}

double average_error(const std::vector<GlobalMotion>& generated,
                     const std::vector<TrajectorySpec>& specs) {
  check_batch(generated, specs);
  long total = 0;
  double sum = 0.0;
  for (size_t i = 0; i < generated.size(); ++i) {
    for (double e : keyframe_errors(generated[i], specs[i])) {
      ++total;
      sum += e;
    }
  }
  if (total == 0) throw DataError("no masked keyframes in the batch");
  return 100.0 * sum / static_cast<double>(total);
}

double foot_skating_ratio(const GlobalMotion& motion, const Skeleton& skeleton, double skate_dist,
                          double height) {
  const int frames = motion.frames();
  if (frames < 2) throw DataError("foot skating needs at least two frames");
  if (!(skate_dist > 0.0) || !(height > 0.0)) throw ConfigError("skating thresholds must be positive");
  int skating = 0;
  for (int f = 0; f + 1 < frames; ++f) {
    bool any = false;
    for (int foot : skeleton.foot_joints) {
      const Eigen::Vector3d a = motion.position(f, foot);
      const Eigen::Vector3d b = motion.position(f + 1, foot);
      const double slide = std::hypot(b.x() - a.x(), b.z() - a.z());
      if (a.y() < height && slide > skate_dist) any = true;
    }
    if (any) ++skating;
  }
  return static_cast<double>(skating) / (frames - 1);
}

double diversity(const Eigen::MatrixXd& features, int subset_size, std::uint64_t seed) {
  if (subset_size < 1) throw ConfigError("diversity subset size must be positive");
  if (features.rows() < 2 * subset_size) {
    throw DataError("diversity needs at least twice the subset size in samples");
  }
  std::vector<int> order(features.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  double sum = 0.0;
  for (int i = 0; i < subset_size; ++i) {
    sum += (features.row(order[i]) - features.row(order[subset_size + i])).norm();
  }
  return sum / subset_size;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError(std::string("eigendecomposition failed: ") + what);
  const Eigen::VectorXd values = eig.eigenvalues();
  const double tol = 1e-9 * std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.size() > 0 && values.minCoeff() < -tol) {
    throw NumericError(std::string("covariance is not positive semidefinite: ") + what);
  }
  return eig.eigenvectors() * values.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1,
                        const Eigen::VectorXd& mu2, const Eigen::MatrixXd& cov2) {
  const Eigen::Index d = mu1.size();
  if (mu2.size() != d || cov1.rows() != d || cov1.cols() != d || cov2.rows() != d ||
      cov2.cols() != d) {
    throw TensorError("Frechet distance: dimension mismatch");
  }
  const Eigen::MatrixXd s1 = psd_sqrt(cov1, "first");
  psd_sqrt(cov2, "second");
  const Eigen::MatrixXd inner = s1 * (0.5 * (cov2 + cov2.transpose())) * s1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu1 - mu2).squaredNorm() + cov1.trace() + cov2.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

GaussianStats GaussianStats::of(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw DataError("Gaussian statistics need at least two samples");
  GaussianStats s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  return s;
}

double fid_proxy(const Eigen::MatrixXd& generated_features, const Eigen::MatrixXd& real_features) {
  const GaussianStats a = GaussianStats::of(generated_features);
  const GaussianStats b = GaussianStats::of(real_features);
  return frechet_distance(a.mean, a.cov, b.mean, b.cov);
}

int motion_feature_dim(int joint_count) { return 6 * joint_count + 1; }

Eigen::VectorXd extract_motion_features(const GlobalMotion& motion) {
  const int frames = motion.frames();
  const int joints = motion.joint_count();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(motion_feature_dim(joints));
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = sd = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(v.size()));
  };
  for (int j = 0; j < joints; ++j) {
    std::vector<double> speed, accel, height;
    for (int f = 0; f < frames; ++f) {
      height.push_back(motion.position(f, j).y());
      if (f + 1 < frames) speed.push_back((motion.position(f + 1, j) - motion.position(f, j)).norm());
      if (f >= 1 && f + 1 < frames) {
        accel.push_back((motion.position(f + 1, j) - 2.0 * motion.position(f, j) +
                         motion.position(f - 1, j))
                            .norm());
      }
    }
    mean_std(speed, out[6 * j], out[6 * j + 1]);
    mean_std(accel, out[6 * j + 2], out[6 * j + 3]);
    mean_std(height, out[6 * j + 4], out[6 * j + 5]);
  }
  double path = 0.0;
  for (int f = 0; f + 1 < frames; ++f) {
    const Eigen::Vector3d d = motion.position(f + 1, 0) - motion.position(f, 0);
    path += std::hypot(d.x(), d.z());
  }
  out[6 * joints] = path;
  return out;
}

Eigen::MatrixXd feature_matrix(const std::vector<GlobalMotion>& motions) {
  if (motions.empty()) return {};
  Eigen::MatrixXd out(motions.size(), motion_feature_dim(motions.front().joint_count()));
  for (size_t i = 0; i < motions.size(); ++i) out.row(i) = extract_motion_features(motions[i]).transpose();
  return out;
}

MotionTextEmbedder MotionTextEmbedder::fit(const Eigen::MatrixXd& features,
                                           const Eigen::MatrixXd& text, double ridge) {
  if (features.rows() != text.rows() || features.rows() < 2) {
    throw DataError("embedder needs paired rows, at least two");
  }
  MotionTextEmbedder e;
  e.mean_ = features.colwise().mean();
  const Eigen::MatrixXd centered = features.rowwise() - e.mean_;
  e.scale_ = (centered.colwise().squaredNorm() / static_cast<double>(features.rows()))
                 .cwiseSqrt()
                 .unaryExpr([](double s) { return s < 1e-9 ? 1.0 : 1.0 / s; });
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design << centered.array().rowwise() * e.scale_.array(), Eigen::VectorXd::Ones(features.rows());
  Eigen::MatrixXd gram = design.transpose() * design;
  gram.diagonal().head(features.cols()).array() += ridge * static_cast<double>(features.rows());
  e.weights_ = gram.ldlt().solve(design.transpose() * text);
  return e;
}

Eigen::MatrixXd MotionTextEmbedder::embed(const Eigen::MatrixXd& features) const {
  if (features.cols() != mean_.size()) throw TensorError("embedder feature dimension mismatch");
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design << (features.rowwise() - mean_).array().rowwise() * scale_.array(),
      Eigen::VectorXd::Ones(features.rows());
  return design * weights_;
}

std::array<double, 3> r_precision(const Eigen::MatrixXd& motion_embeddings,
                                  const Eigen::MatrixXd& text_embeddings, int pool,
                                  std::uint64_t seed) {
  const Eigen::Index n = motion_embeddings.rows();
  if (n != text_embeddings.rows() || motion_embeddings.cols() != text_embeddings.cols()) {
    throw TensorError("R-precision: embedding shapes disagree");
  }
  if (pool < 2) throw ConfigError("R-precision pool must be at least 2");
  if (n < pool) throw DataError("R-precision needs at least `pool` samples");
  Rng rng(seed);
  std::array<double, 3> hits{};
  std::vector<int> others;
  for (Eigen::Index i = 0; i < n; ++i) {
    others.clear();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) others.push_back(static_cast<int>(k));
    }
    std::shuffle(others.begin(), others.end(), rng);
    const double own = (motion_embeddings.row(i) - text_embeddings.row(i)).norm();
    int rank = 0;
    for (int k = 0; k < pool - 1; ++k) {
      if ((motion_embeddings.row(i) - text_embeddings.row(others[k])).norm() < own) ++rank;
    }
    for (int k = 0; k < 3; ++k) {
      if (rank <= k) hits[k] += 1.0;
    }
  }
  for (double& h : hits) h /= static_cast<double>(n);
  return hits;
}

nlohmann::json MetricsReport::to_json() const {
  return {{"traj_err_pct", traj_err_pct},
          {"loc_err_pct", loc_err_pct},
          {"avg_err_cm", avg_err_cm},
          {"foot_skating_ratio", foot_skating_ratio},
          {"diversity", diversity},
          {"fid_proxy", fid_proxy},
          {"r_precision_top_k", r_precision_top_k},
          {"samples", samples},
          {"seconds_per_sample", seconds_per_sample}};
}

void MetricsReport::print_header(std::ostream& out) {
  out << std::left << std::setw(16) << "control" << std::right << std::setw(10) << "FID"
      << std::setw(8) << "Top-1" << std::setw(8) << "Top-2" << std::setw(8) << "Top-3"
      << std::setw(11) << "Diversity" << std::setw(10) << "Skating" << std::setw(12)
      << "Traj.err%" << std::setw(11) << "Loc.err%" << std::setw(13) << "Avg.err(cm)"
      << std::setw(11) << "s/sample" << '\n';
}

void MetricsReport::print_row(std::ostream& out, const std::string& label) const {
  out << std::left << std::setw(16) << label << std::right << std::fixed << std::setprecision(4)
      << std::setw(10) << fid_proxy << std::setprecision(3) << std::setw(8)
      << r_precision_top_k[0] << std::setw(8) << r_precision_top_k[1] << std::setw(8)
      << r_precision_top_k[2] << std::setw(11) << diversity << std::setw(10)
      << foot_skating_ratio << std::setprecision(2) << std::setw(12) << traj_err_pct
      << std::setw(11) << loc_err_pct << std::setw(13) << avg_err_cm << std::setprecision(3)
      << std::setw(11) << seconds_per_sample << '\n';
  out.unsetf(std::ios::fixed);
}

}  // namespace trajmotion
