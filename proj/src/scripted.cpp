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

#include "egopose/scripted.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "egopose/errors.hpp"
#include "egopose/frame_io.hpp"

namespace egopose {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

CameraIntrinsics default_hmd_intrinsics() {
  CameraIntrinsics k;
  k.fx = 686.0;
  k.fy = 686.0;
  k.px = 448.0;
  k.py = 252.0;
  k.s = 0.0;
  k.width = 896;
  k.height = 504;
  return k;
}

ModelPoints default_drill_model() {
  std::vector<Vector3<double>> pts;
  // Body: 6 x 6 x 18 cm box corners and edge midpoints.
  for (double x : {-0.03, 0.0, 0.03})
    for (double y : {-0.03, 0.0, 0.03})
      for (double z : {-0.08, 0.01, 0.10})
        if (x != 0.0 || y != 0.0 || z == -0.08) pts.emplace_back(x, y, z);
  // Handle below the body.
  for (double y : {-0.06, -0.09, -0.12, -0.15})
    for (double x : {-0.015, 0.015}) pts.emplace_back(x, y, -0.02);
  // Bit along +z.
  for (double z : {0.12, 0.14, 0.16, 0.18}) pts.emplace_back(0.0, 0.0, z);

  ModelPoints m;
  m.points.resize(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) m.points.col(static_cast<Eigen::Index>(i)) = pts[i];
  m.tip = Vector3<double>(0.0, 0.0, 0.18);
  m.axis = Vector3<double>(0.0, 0.0, 1.0);
  return m;
}

PoseRecord scripted_pose(std::uint64_t seed, std::uint32_t frame_id, const CameraIntrinsics& k) {
  std::mt19937_64 rng(splitmix(splitmix(seed) ^ frame_id));
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Uniform rotation (Shoemake), expressed as axis-angle with angle < pi.
  const double u1 = u01(rng), u2 = u01(rng), u3 = u01(rng);
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::Quaterniond q(std::sqrt(u1) * std::cos(two_pi * u3), std::sqrt(1.0 - u1) * std::sin(two_pi * u2),
                       std::sqrt(1.0 - u1) * std::cos(two_pi * u2), std::sqrt(u1) * std::sin(two_pi * u3));
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  q.normalize();
  const Eigen::AngleAxisd aa(q);

  PoseRecord rec;
  rec.frame_id = frame_id;
  rec.pose.rotation = aa.axis() * aa.angle();
  const double tz = 0.3 + 1.2 * u01(rng);
  const Vector2<double> c(k.width * (0.15 + 0.7 * u01(rng)), k.height * (0.15 + 0.7 * u01(rng)));
  rec.pose.translation = recover_translation<double>(c, tz, k);

  // Hand: wrist beside the tool, five fingers of four joints fanning out.
  const Vector3<double> wrist = rec.pose.translation + Vector3<double>(0.04, 0.09, 0.02);
  rec.hand.col(0) = wrist;
  for (int f = 0; f < 5; ++f) {
    const double spread = -0.5 + 0.25 * f + 0.1 * (u01(rng) - 0.5);
    const Vector3<double> dir = Vector3<double>(std::sin(spread), -std::cos(spread), 0.2 * (u01(rng) - 0.5)).normalized();
    for (int j = 0; j < 4; ++j) rec.hand.col(1 + 4 * f + j) = wrist + dir * (0.03 + 0.022 * j);
  }
  return rec;
}

FrameYUV420 render_synthetic_frame(const Pose6DoF& pose, const ModelPoints& model, const CameraIntrinsics& k,
                                   std::uint32_t frame_id) {
  FrameYUV420 frame(k.width, k.height);
  std::fill(frame.y.begin(), frame.y.end(), std::uint8_t{110});
  const Points3<double> cam = transform_points(pose, model.points);
  for (Eigen::Index i = 0; i < cam.cols(); ++i) {
    if (cam(2, i) <= 0.0) continue;
    const Vector2<double> p = project_point(k, Vector3<double>(cam.col(i)));
    const int cx = static_cast<int>(std::lround(p.x()));
    const int cy = static_cast<int>(std::lround(p.y()));
    for (int y = cy - 1; y <= cy + 1; ++y)
      for (int x = cx - 1; x <= cx + 1; ++x)
        if (x >= 0 && y >= 0 && x < k.width && y < k.height)
          frame.y[static_cast<std::size_t>(y) * k.width + x] = 235;
  }
  frame.frame_id = frame_id;
  return frame;
}

SyntheticSource::SyntheticSource(std::uint64_t seed, CameraIntrinsics k, ModelPoints model, std::uint32_t count)
    : seed_(seed), k_(std::move(k)), model_(std::move(model)), count_(count) {
  k_.validate();
}

std::optional<SourceFrame> SyntheticSource::next() {
  if (count_ != 0 && next_id_ >= count_) return std::nullopt;
  const std::uint32_t id = next_id_++;
  SourceFrame out;
  out.ground_truth = scripted_pose(seed_, id, k_);
  out.frame = render_synthetic_frame(out.ground_truth->pose, model_, k_, id);
  return out;
}

DirectorySource::DirectorySource(const std::filesystem::path& dir, CameraIntrinsics k)
    : sidecars_(list_fixture_sidecars(dir)), k_(std::move(k)) {
  if (sidecars_.empty()) throw ConfigError("no I420 fixtures in " + dir.string());
  const auto truth = dir / "ground_truth.jsonl";
  if (std::filesystem::exists(truth))
    for (auto& r : read_pose_records(truth)) truth_[r.frame_id] = r;
}

std::optional<SourceFrame> DirectorySource::next() {
  if (pos_ >= sidecars_.size()) return std::nullopt;
  SourceFrame out;
  out.frame = load_i420_fixture(sidecars_[pos_++]);
  if (out.frame.width != k_.width || out.frame.height != k_.height)
    throw ConfigError("fixture " + sidecars_[pos_ - 1].string() + " is " + std::to_string(out.frame.width) + "x" +
                      std::to_string(out.frame.height) + " but intrinsics are " + std::to_string(k_.width) + "x" +
                      std::to_string(k_.height));
  if (auto it = truth_.find(out.frame.frame_id); it != truth_.end()) out.ground_truth = it->second;
  return out;
}

std::unique_ptr<FrameSource> open_frame_source(const std::string& source, const CameraIntrinsics& k,
                                               const ModelPoints& model, std::uint32_t count) {
  if (source == "synthetic") return std::make_unique<SyntheticSource>(1, k, model, count);
  if (source.rfind("synthetic:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(source.substr(10));
    } catch (const std::exception&) {
      throw ConfigError("bad synthetic seed in '" + source + "'");
    }
    return std::make_unique<SyntheticSource>(seed, k, model, count);
  }
  if (!std::filesystem::is_directory(source)) throw ConfigError("frame source '" + source + "' is not a directory");
  return std::make_unique<DirectorySource>(source, k);
}

}  // namespace egopose
