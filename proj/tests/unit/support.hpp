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

// Random instance generators shared by the unit and acceptance tests.

#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <numbers>
#include <random>

#include <unistd.h>

#include <Eigen/Geometry>

#include "egopose/geometry.hpp"
#include "egopose/losses.hpp"

namespace egopose::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  std::uint64_t bits() { return gen_(); }
  std::mt19937_64& engine() { return gen_; }

  Eigen::Vector3d unit_vector() {
    Eigen::Vector3d v(normal(), normal(), normal());
    while (v.norm() < 1e-6) v = Eigen::Vector3d(normal(), normal(), normal());
    return v.normalized();
  }

  /// Rotation vector with angle uniform in [lo, hi).
  Eigen::Vector3d rotation(double lo = 0.0, double hi = std::numbers::pi) { return unit_vector() * uniform(lo, hi); }

  Eigen::Vector3d vector(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  Points3<double> points(Eigen::Index n, double half_extent = 0.1) {
    Points3<double> p(3, n);
    for (Eigen::Index i = 0; i < n; ++i) p.col(i) = vector(-half_extent, half_extent);
    return p;
  }

  HandSkeleton21 hand(double half_extent = 0.2) {
    HandSkeleton21 h;
    for (int j = 0; j < kHandJoints; ++j) h.col(j) = vector(-half_extent, half_extent);
    return h;
  }

 private:
  std::mt19937_64 gen_;
};

/// Rotation matrix through Eigen's quaternion path, independent of Rodrigues.
inline Eigen::Matrix3d quaternion_oracle(const Eigen::Vector3d& r) {
  const double theta = r.norm();
  if (theta == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::Quaterniond(Eigen::AngleAxisd(theta, r / theta)).toRotationMatrix();
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("egopose_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace egopose::testing
