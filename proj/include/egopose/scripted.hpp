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

// Scripted poses and synthetic frames shared by client, server and tests.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include "egopose/geometry.hpp"
#include "egopose/io.hpp"
#include "egopose/preprocess.hpp"

namespace egopose {

/// 896x504 head-mounted camera, f = 686 px, centered principal point.
CameraIntrinsics default_hmd_intrinsics();

/// Small surgical-drill stand-in: body, handle and bit points in meters,
/// tip at the end of the bit, axis along the bit.
ModelPoints default_drill_model();

/// Deterministic pose for (seed, frame_id): t_z in [0.3, 1.5] m, uniformly
/// random rotation, center projecting inside the inner 70% of the frame,
/// and a 21-joint hand next to the tool.
PoseRecord scripted_pose(std::uint64_t seed, std::uint32_t frame_id, const CameraIntrinsics& k);

/// Gray frame with the projected model points drawn as bright 3x3 dots.
FrameYUV420 render_synthetic_frame(const Pose6DoF& pose, const ModelPoints& model, const CameraIntrinsics& k,
                                   std::uint32_t frame_id);

struct SourceFrame {
  FrameYUV420 frame;
  std::optional<PoseRecord> ground_truth;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// nullopt when exhausted.
  virtual std::optional<SourceFrame> next() = 0;
  virtual const CameraIntrinsics& intrinsics() const = 0;
};

/// Renders scripted poses with frame ids 0, 1, ... up to `count` frames
/// (0 means unbounded).
class SyntheticSource final : public FrameSource {
 public:
  SyntheticSource(std::uint64_t seed, CameraIntrinsics k, ModelPoints model, std::uint32_t count = 0);
  std::optional<SourceFrame> next() override;
  const CameraIntrinsics& intrinsics() const override { return k_; }

 private:
  std::uint64_t seed_;
  CameraIntrinsics k_;
  ModelPoints model_;
  std::uint32_t count_;
  std::uint32_t next_id_ = 0;
};

/// I420 fixtures with JSON sidecars. Ground truth comes from
/// `ground_truth.jsonl` in the same directory when present. Frames are
/// renumbered 0, 1, ... in file order unless the sidecars carry ids.
class DirectorySource final : public FrameSource {
 public:
  DirectorySource(const std::filesystem::path& dir, CameraIntrinsics k);
  std::optional<SourceFrame> next() override;
  const CameraIntrinsics& intrinsics() const override { return k_; }

 private:
  std::vector<std::filesystem::path> sidecars_;
  std::map<std::uint32_t, PoseRecord> truth_;
  CameraIntrinsics k_;
  std::size_t pos_ = 0;
};

/// "synthetic", "synthetic:SEED" or a fixture directory.
std::unique_ptr<FrameSource> open_frame_source(const std::string& source, const CameraIntrinsics& k,
                                               const ModelPoints& model, std::uint32_t count);

}  // namespace egopose
