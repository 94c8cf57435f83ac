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

// Head-mounted display simulator: paced frame sender, pose receiver and a
// fixed-rate render loop fed through a single-slot mailbox.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "egopose/io.hpp"
#include "egopose/latency.hpp"
#include "egopose/net.hpp"
#include "egopose/scripted.hpp"

namespace egopose {

/// Latest-value slot: writers overwrite, the reader takes whatever is newest.
template <typename T>
class LatestSlot {
 public:
  void put(T value) {
    std::lock_guard lock(mu_);
    if (value_) ++overwritten_;
    value_ = std::move(value);
  }
  std::optional<T> take() {
    std::lock_guard lock(mu_);
    std::optional<T> out;
    out.swap(value_);
    return out;
  }
  std::uint64_t overwritten() const {
    std::lock_guard lock(mu_);
    return overwritten_;
  }

 private:
  mutable std::mutex mu_;
  std::optional<T> value_;
  std::uint64_t overwritten_ = 0;
};

struct ClientConfig {
  Endpoint server = Endpoint::loopback(5600);
  double fps = 30.0;
  /// Stop after this many frames (0: until the source ends or duration).
  std::uint32_t max_frames = 0;
  /// Stop after this long (0: no limit).
  double duration_s = 0.0;
  LinkConfig link;
  double render_hz = 60.0;
  /// Simulated render cost per pose.
  double render_ms = 0.0;
  std::optional<std::filesystem::path> overlay_dir;
  /// Model used to compare projected ground-truth and predicted points.
  std::optional<ModelPoints> model;
  int probe_attempts = 5;
  std::chrono::milliseconds probe_interval{200};
  /// How long to wait for outstanding poses after the last frame.
  std::chrono::milliseconds drain_timeout{1500};
};

struct ClientResult {
  std::uint32_t frames_sent = 0;
  std::uint32_t poses_received = 0;
  std::uint32_t poses_rendered = 0;
  std::uint64_t packets_dropped = 0;
  std::uint64_t mailbox_overwrites = 0;
  /// Client-side stages: capture, first_packet_sent, pose_received, render_done.
  std::vector<LatencyTrace> traces;
  /// Poses as received over the wire (hand not transmitted).
  std::vector<PoseRecord> received;
  std::vector<PoseRecord> ground_truth;
  /// Largest pixel distance between projected ground-truth and predicted
  /// model points over rendered frames with ground truth.
  std::optional<double> max_overlay_discrepancy_px;
  std::uint32_t overlays_written = 0;
};

/// Streams frames from `source` to the server. Throws ConnectionError when
/// the server does not answer the handshake within the retry budget.
ClientResult run_client(const ClientConfig& config, FrameSource& source);

/// Maximum distance between the model points projected under both poses.
double projection_discrepancy_px(const Pose6DoF& a, const Pose6DoF& b, const ModelPoints& model,
                                 const CameraIntrinsics& k);

}  // namespace egopose
