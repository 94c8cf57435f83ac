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

// Rotation representations, rigid transforms and pinhole camera geometry.
//
// Everything here is templated on the scalar type so the same code runs on
// double and on Eigen::AutoDiffScalar. All lengths are meters.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "egopose/errors.hpp"

namespace egopose {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
/// Column-per-point 3D point set.
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

/// Axis-angle rotation vector (unit axis scaled by the angle in radians).
using RotationVec = Eigen::Vector3d;
using RotationMatrix = Eigen::Matrix3d;
/// Camera-frame translation in meters.
using TranslationVec = Eigen::Vector3d;

template <typename Scalar>
struct PoseT {
  Vector3<Scalar> rotation = Vector3<Scalar>::Zero();
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();
};

/// Rigid tool pose in the camera frame: axis-angle rotation + translation.
using Pose6DoF = PoseT<double>;

/// Pinhole intrinsics for an image of `width` x `height` pixels.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double px = 0.0;
  double py = 0.0;
  double s = 0.0;
  int width = 1;
  int height = 1;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ConfigError("intrinsics: image size must be positive");
    if (!(px >= 0.0 && px <= width && py >= 0.0 && py <= height))
      throw ConfigError("intrinsics: principal point outside the image");
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, s, px, 0.0, fy, py, 0.0, 0.0, 1.0;
    return k;
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Rigid model geometry. Tip and drill axis come from metadata; either may be absent.
struct ModelPoints {
  Points3<double> points;
  std::optional<Eigen::Vector3d> tip;
  std::optional<Eigen::Vector3d> axis;

  Eigen::Index size() const { return points.cols(); }

  void validate() const {
    if (points.cols() == 0) throw ConfigError("model: point set is empty");
    if (!points.allFinite()) throw ConfigError("model: non-finite point");
    if (axis && std::abs(axis->norm() - 1.0) > 1e-6) throw ConfigError("model: axis must be unit length");
  }
};

template <typename Derived>
Matrix3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> k;
  k << Scalar(0), -v(2), v(1), v(2), Scalar(0), -v(0), -v(1), v(0), Scalar(0);
  return k;
}

/// Rodrigues formula. Small angles use the second-order series, which is
/// exact to machine precision below the switch point and differentiable at 0.
template <typename Derived>
Matrix3<typename Derived::Scalar> axis_angle_to_matrix(const Eigen::MatrixBase<Derived>& r) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar theta2 = r.squaredNorm();
  const Matrix3<Scalar> k = skew(r);
  if (theta2 < Scalar(1e-16)) {
    return Matrix3<Scalar>::Identity() + k + Scalar(0.5) * k * k;
  }
  const Scalar theta = sqrt(theta2);
  const Scalar a = sin(theta) / theta;
  const Scalar b = (Scalar(1) - cos(theta)) / theta2;
  return Matrix3<Scalar>::Identity() + a * k + b * k * k;
}

template <typename Derived>
bool is_rotation_matrix(const Eigen::MatrixBase<Derived>& m, double tol = 1e-6) {
  const Eigen::Matrix3d r = m.template cast<double>();
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

namespace detail {

/// Sign rule for the angle = pi ambiguity: first nonzero component positive.
inline Eigen::Vector3d canonical_half_turn_axis(Eigen::Vector3d axis) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis(i)) > 1e-12) {
      if (axis(i) < 0.0) axis = -axis;
      break;
    }
  }
  return axis;
}

}  // namespace detail

/// Wraps an arbitrary rotation vector to the canonical form with norm in [0, pi].
inline RotationVec canonicalize_rotation(const RotationVec& r) {
  if (!r.allFinite()) throw InvariantError("rotation vector must be finite");
  const double theta = r.norm();
  if (theta == 0.0) return RotationVec::Zero();
  Eigen::Vector3d axis = r / theta;
  double wrapped = std::fmod(theta, 2.0 * M_PI);
  if (wrapped > M_PI) {
    wrapped = 2.0 * M_PI - wrapped;
    axis = -axis;
  }
  if (wrapped == M_PI) axis = detail::canonical_half_turn_axis(axis);
  return wrapped * axis;
}

/// Inverse of axis_angle_to_matrix, returning the canonical vector (norm in [0, pi]).
/// Throws InvariantError when `m` is not a proper rotation within 1e-6.
template <typename Derived>
RotationVec matrix_to_axis_angle(const Eigen::MatrixBase<Derived>& m) {
  const Eigen::Matrix3d r = m.template cast<double>();
  if (!is_rotation_matrix(r)) throw InvariantError("matrix_to_axis_angle: input is not a rotation matrix");

  // w = sin(theta) * axis
  const Eigen::Vector3d w(0.5 * (r(2, 1) - r(1, 2)), 0.5 * (r(0, 2) - r(2, 0)), 0.5 * (r(1, 0) - r(0, 1)));
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double s = w.norm();
  const double theta = std::atan2(s, c);

  if (theta < 1e-5) {
    // theta / sin(theta) ~ 1 + theta^2 / 6
    return w * (1.0 + theta * theta / 6.0);
  }
  if (M_PI - theta > 1e-3) {
    return w * (theta / s);
  }

  // Near a half turn: the symmetric part is (1 - cos) * a a^T + cos * I.
  const Eigen::Matrix3d sym = 0.5 * (r + r.transpose()) - c * Eigen::Matrix3d::Identity();
  Eigen::Index k = 0;
  sym.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = sym.col(k) / std::sqrt(sym(k, k) * (1.0 - c));
  axis.normalize();
  if (s > 1e-12) {
    if (axis.dot(w) < 0.0) axis = -axis;
  } else {
    axis = detail::canonical_half_turn_axis(axis);
  }
  return theta * axis;
}

/// Missing translation components from the object center pixel and depth.
template <typename Scalar>
Vector3<Scalar> recover_translation(const Vector2<Scalar>& center, const Scalar& tz, const CameraIntrinsics& k) {
  if (!(tz > Scalar(0))) throw DomainError("recover_translation: t_z must be positive");
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw DomainError("recover_translation: focal lengths must be positive");
  return Vector3<Scalar>((center.x() - Scalar(k.px)) * tz / Scalar(k.fx),
                         (center.y() - Scalar(k.py)) * tz / Scalar(k.fy), tz);
}

/// Pinhole projection of a camera-frame point, skew included.
template <typename Derived>
Vector2<typename Derived::Scalar> project_point(const CameraIntrinsics& k, const Eigen::MatrixBase<Derived>& x) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  if (!(x(2) > Scalar(0))) throw BehindCameraError("project_point: point is at or behind the camera");
  const Scalar xn = x(0) / x(2);
  const Scalar yn = x(1) / x(2);
  return Vector2<Scalar>(Scalar(k.fx) * xn + Scalar(k.s) * yn + Scalar(k.px), Scalar(k.fy) * yn + Scalar(k.py));
}

/// R * x + t applied to every column.
template <typename Scalar, typename Derived>
Points3<Scalar> transform_points(const PoseT<Scalar>& pose, const Eigen::MatrixBase<Derived>& points) {
  const Matrix3<Scalar> r = axis_angle_to_matrix(pose.rotation);
  Points3<Scalar> out = r * points.template cast<Scalar>();
  out.colwise() += pose.translation;
  return out;
}

template <typename Scalar>
Points3<Scalar> transform_points(const PoseT<Scalar>& pose, const ModelPoints& model) {
  return transform_points(pose, model.points);
}

/// Homogeneous [R | t; 0 1].
template <typename Scalar>
Matrix4<Scalar> pose_matrix(const PoseT<Scalar>& pose) {
  Matrix4<Scalar> t = Matrix4<Scalar>::Identity();
  t.template topLeftCorner<3, 3>() = axis_angle_to_matrix(pose.rotation);
  t.template topRightCorner<3, 1>() = pose.translation;
  return t;
}

/// Intrinsics for the same camera after an anisotropic resize to `to_width` x `to_height`.
inline CameraIntrinsics rescale_intrinsics(const CameraIntrinsics& k, int to_width, int to_height) {
  if (to_width <= 0 || to_height <= 0) throw DomainError("rescale_intrinsics: target size must be positive");
  if (k.width <= 0 || k.height <= 0) throw DomainError("rescale_intrinsics: source size must be positive");
  if (to_width == k.width && to_height == k.height) return k;
  const double sx = static_cast<double>(to_width) / k.width;
  const double sy = static_cast<double>(to_height) / k.height;
  CameraIntrinsics out = k;
  out.fx = k.fx * sx;
  out.px = k.px * sx;
  out.s = k.s * sx;
  out.fy = k.fy * sy;
  out.py = k.py * sy;
  out.width = to_width;
  out.height = to_height;
  return out;
}

}  // namespace egopose
