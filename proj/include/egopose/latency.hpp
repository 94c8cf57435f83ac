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

// Per-frame stage timestamps and the pixel-to-photon latency report.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "egopose/metrics.hpp"

namespace egopose {

enum class Stage : std::uint8_t {
  Capture = 0,
  FirstPacketSent,
  FrameComplete,
  PreprocessDone,
  InferenceDone,
  FilterDone,
  PoseSent,
  PoseReceived,
  RenderDone,
};

inline constexpr std::size_t kStageCount = 9;

std::string_view stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

/// Microsecond timestamps for one frame. Recorded stages are non-decreasing
/// in stage order.
struct LatencyTrace {
  std::uint32_t frame_id = 0;
  std::array<std::optional<std::uint64_t>, kStageCount> at{};

  bool has(Stage s) const { return at[static_cast<std::size_t>(s)].has_value(); }
  std::uint64_t get(Stage s) const { return at[static_cast<std::size_t>(s)].value(); }
  /// to - from in microseconds, when both are recorded.
  std::optional<std::int64_t> span(Stage from, Stage to) const;
  std::optional<std::int64_t> pixel_to_photon() const { return span(Stage::Capture, Stage::RenderDone); }
  bool complete() const { return has(Stage::Capture) && has(Stage::RenderDone); }
};

/// Returns `trace` with `stage` set. Throws InstrumentationError if the stage
/// is already recorded or the timestamp breaks stage-order monotonicity.
LatencyTrace record_stage(LatencyTrace trace, Stage stage, std::uint64_t timestamp_us);

/// Records every stage of `other` into `trace` (same frame id required).
LatencyTrace merge_traces(LatencyTrace trace, const LatencyTrace& other);

struct SpanStats {
  std::string name;
  MeanStd ms;
  std::size_t n = 0;
};

struct LatencyReport {
  std::size_t n_traces = 0;
  /// Consecutive stage-to-stage spans.
  std::vector<SpanStats> stages;
  /// Video transmission, preprocessing, inference + filtering, return
  /// transmission, rendering. These telescope to pixel-to-photon.
  std::vector<SpanStats> breakdown;
  MeanStd pixel_to_photon_ms;
  double pose_update_fps = 0.0;
};

/// Statistics over the complete traces (capture and render recorded).
/// Throws DomainError when there are none.
LatencyReport latency_report(std::span<const LatencyTrace> traces);

std::string format_latency_report(const LatencyReport& report);

nlohmann::json trace_to_json(const LatencyTrace& trace);
LatencyTrace trace_from_json(const nlohmann::json& j);

}  // namespace egopose
