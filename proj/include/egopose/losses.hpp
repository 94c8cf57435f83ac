// Copyright 2026 The EgoPose Authors.
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

// Training losses for the rotation, translation and hand heads, plus their
// analytic gradients with respect to the prediction.
//
// Smooth-L1 on a vector is applied per component and summed over components
// before the average over points.

#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "egopose/geometry.hpp"

namespace egopose {

inline constexpr int kHandJoints = 21;

template <typename Scalar>
using HandT = Eigen::Matrix<Scalar, 3, kHandJoints>;

/// 21 camera-frame hand joints, one column per joint, meters.
using HandSkeleton21 = HandT<double>;

template <typename Scalar>
Scalar smooth_l1(const Scalar& x) {
  using std::abs;
  const Scalar ax = abs(x);
  if (ax < Scalar(1)) return Scalar(0.5) * x * x;
  return ax - Scalar(0.5);
}

inline double smooth_l1_derivative(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

/// Half the mean squared distance between model points rotated by the
/// predicted and by the ground-truth rotation.
template <typename DerivedPred, typename DerivedGt>
typename DerivedPred::Scalar rotation_loss(const Eigen::MatrixBase<DerivedPred>& r_pred,
                                           const Eigen::MatrixBase<DerivedGt>& r_gt,
                                           const Points3<double>& points) {
  using Scalar = typename DerivedPred::Scalar;
  const Eigen::Index m = points.cols();
  if (m == 0) throw DomainError("rotation_loss: model point set is empty");
  const Vector3<Scalar> gt = r_gt.template cast<Scalar>();
  const Matrix3<Scalar> delta = axis_angle_to_matrix(r_pred) - axis_angle_to_matrix(gt);
  const Points3<Scalar> diff = delta * points.template cast<Scalar>();
  return diff.squaredNorm() / Scalar(2.0 * static_cast<double>(m));
}

template <typename DerivedPred, typename DerivedGt>
typename DerivedPred::Scalar translation_loss(const Eigen::MatrixBase<DerivedPred>& t_pred,
                                              const Eigen::MatrixBase<DerivedGt>& t_gt,
                                              const Points3<double>& points) {
  using Scalar = typename DerivedPred::Scalar;
  const Eigen::Index m = points.cols();
  if (m == 0) throw DomainError("translation_loss: model point set is empty");
  const Vector3<Scalar> gt = t_gt.template cast<Scalar>();
  Scalar sum(0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector3<Scalar> x = points.col(i).template cast<Scalar>();
    const Vector3<Scalar> d = (x + t_pred) - (x + gt);
    for (int c = 0; c < 3; ++c) sum += smooth_l1(d(c));
  }
  return sum / Scalar(2.0 * static_cast<double>(m));
}

template <typename DerivedPred, typename DerivedGt>
typename DerivedPred::Scalar hand_loss(const Eigen::MatrixBase<DerivedPred>& h_pred,
                                       const Eigen::MatrixBase<DerivedGt>& h_gt) {
  using Scalar = typename DerivedPred::Scalar;
  static_assert(DerivedPred::RowsAtCompileTime == 3 && DerivedPred::ColsAtCompileTime == kHandJoints,
                "hand_loss expects a 3x21 skeleton");
  Scalar sum(0);
  for (int j = 0; j < kHandJoints; ++j)
    for (int c = 0; c < 3; ++c) sum += smooth_l1(Scalar(h_pred(c, j) - Scalar(h_gt(c, j))));
  return sum / Scalar(2.0 * kHandJoints);
}

/// dR(r)/dr_i. Uses the closed form of Gallego and Yezzi away from zero and
/// the derivative of the second-order series near it.
inline Eigen::Matrix3d rotation_matrix_derivative(const Eigen::Vector3d& r, int i) {
  const Eigen::Vector3d e = Eigen::Vector3d::Unit(i);
  const double theta2 = r.squaredNorm();
  if (theta2 < 1e-12) {
    const Eigen::Matrix3d ke = skew(e);
    const Eigen::Matrix3d kr = skew(r);
    return ke + 0.5 * (ke * kr + kr * ke);
  }
  const Eigen::Matrix3d rot = axis_angle_to_matrix(r);
  const Eigen::Vector3d v = r.cross((Eigen::Matrix3d::Identity() - rot) * e);
  return (r(i) * skew(r) + skew(v)) * rot / theta2;
}

inline Eigen::Vector3d rotation_loss_gradient(const Eigen::Vector3d& r_pred, const Eigen::Vector3d& r_gt,
                                              const Points3<double>& points) {
  const Eigen::Index m = points.cols();
  if (m == 0) throw DomainError("rotation_loss_gradient: model point set is empty");
  const Eigen::Matrix3d delta = axis_angle_to_matrix(r_pred) - axis_angle_to_matrix(r_gt);
  // sum_x (delta x) x^T, contracted against each dR/dr_i
  const Eigen::Matrix3d g = delta * (points * points.transpose());
  Eigen::Vector3d grad;
  for (int i = 0; i < 3; ++i) grad(i) = (g.cwiseProduct(rotation_matrix_derivative(r_pred, i))).sum();
  return grad / static_cast<double>(m);
}

inline Eigen::Vector3d translation_loss_gradient(const Eigen::Vector3d& t_pred, const Eigen::Vector3d& t_gt,
                                                 const Points3<double>& points) {
  const Eigen::Index m = points.cols();
  if (m == 0) throw DomainError("translation_loss_gradient: model point set is empty");
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Vector3d x = points.col(k);
    const Eigen::Vector3d d = (x + t_pred) - (x + t_gt);
    for (int c = 0; c < 3; ++c) grad(c) += smooth_l1_derivative(d(c));
  }
  return grad / (2.0 * static_cast<double>(m));
}

inline HandSkeleton21 hand_loss_gradient(const HandSkeleton21& h_pred, const HandSkeleton21& h_gt) {
  return (h_pred - h_gt).unaryExpr([](double d) { return smooth_l1_derivative(d); }) / (2.0 * kHandJoints);
}

/// Deterministic uniform subsample of at most `max_points` model points
/// (partial Fisher-Yates over a SplitMix64 stream). Order of the kept points
/// follows their original order.
Points3<double> subsample_points(const Points3<double>& points, Eigen::Index max_points = 500,
                                 std::uint64_t seed = 0x5eed);

}  // namespace egopose
