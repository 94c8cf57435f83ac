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

// In-process loopback benchmark: server + client with injected delays.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "egopose/client.hpp"
#include "egopose/detection.hpp"
#include "egopose/latency.hpp"
#include "egopose/scripted.hpp"
#include "egopose/server.hpp"

namespace egopose {

struct BenchConfig {
  std::uint32_t frames = 100;
  double fps = 30.0;
  double loss_rate = 0.0;
  /// One-way video transmission delay.
  double delay_ms = 0.0;
  double infer_delay_ms = 0.0;
  double render_ms = 0.0;
  double render_hz = 60.0;
  std::uint64_t seed = 1;
  CameraIntrinsics intrinsics = default_hmd_intrinsics();
  ModelPoints model = default_drill_model();
  AnchorConfig anchors;
  FilterParams filter;
  PreprocessConfig preprocess;
};

struct BenchResult {
  /// Client and server stages merged by frame id.
  std::vector<LatencyTrace> traces;
  std::optional<LatencyReport> report;
  ClientResult client;
  ServerStats server;
  std::size_t completed = 0;
  /// Worst tool ADD of received poses against the script (meters).
  double max_tool_add_m = 0.0;
  /// Worst hand ADD of server predictions against the script (meters).
  double max_hand_add_m = 0.0;
  std::vector<std::string> warnings;
};

/// Runs `frames` scripted frames through a loopback server/client pair with
/// the synthetic backend. Fewer complete round trips than requested is a
/// warning; the report covers the completed subset.
BenchResult run_bench(const BenchConfig& config);

std::string format_bench_result(const BenchConfig& config, const BenchResult& result);

}  // namespace egopose
