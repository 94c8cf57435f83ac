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

#include "egopose/latency.hpp"

#include <cstdio>
#include <sstream>

namespace egopose {

namespace {

constexpr std::array<std::string_view, kStageCount> kStageNames{
    "capture",     "first_packet_sent", "frame_complete", "preprocess_done", "inference_done",
    "filter_done", "pose_sent",         "pose_received",  "render_done"};

struct Group {
  const char* name;
  Stage from;
  Stage to;
};

constexpr std::array<Group, 5> kBreakdown{{
    {"video transmission", Stage::Capture, Stage::FrameComplete},
    {"preprocessing", Stage::FrameComplete, Stage::PreprocessDone},
    {"inference + filtering", Stage::PreprocessDone, Stage::FilterDone},
    {"return transmission", Stage::FilterDone, Stage::PoseReceived},
    {"rendering", Stage::PoseReceived, Stage::RenderDone},
}};

SpanStats span_stats(std::string name, std::span<const LatencyTrace> traces, Stage from, Stage to) {
  std::vector<double> ms;
  for (const auto& t : traces)
    if (const auto d = t.span(from, to)) ms.push_back(static_cast<double>(*d) / 1000.0);
  SpanStats s;
  s.name = std::move(name);
  s.n = ms.size();
  if (!ms.empty()) s.ms = mean_std(ms);
  return s;
}

}  // namespace

std::string_view stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> stage_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStageCount; ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  return std::nullopt;
}

std::optional<std::int64_t> LatencyTrace::span(Stage from, Stage to) const {
  if (!has(from) || !has(to)) return std::nullopt;
  return static_cast<std::int64_t>(get(to)) - static_cast<std::int64_t>(get(from));
}

LatencyTrace record_stage(LatencyTrace trace, Stage stage, std::uint64_t timestamp_us) {
  const auto idx = static_cast<std::size_t>(stage);
  if (trace.at[idx])
    throw InstrumentationError("frame " + std::to_string(trace.frame_id) + ": stage " +
                               std::string(stage_name(stage)) + " recorded twice");
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (!trace.at[i]) continue;
    const bool before = i < idx;
    if ((before && *trace.at[i] > timestamp_us) || (!before && *trace.at[i] < timestamp_us))
      throw InstrumentationError("frame " + std::to_string(trace.frame_id) + ": stage " +
                                 std::string(stage_name(stage)) + " at " + std::to_string(timestamp_us) +
                                 "us is out of order with " + std::string(kStageNames[i]) + " at " +
                                 std::to_string(*trace.at[i]) + "us");
  }
  trace.at[idx] = timestamp_us;
  return trace;
}

LatencyTrace merge_traces(LatencyTrace trace, const LatencyTrace& other) {
  if (trace.frame_id != other.frame_id) throw InstrumentationError("merge_traces: frame ids differ");
  for (std::size_t i = 0; i < kStageCount; ++i)
    if (other.at[i]) trace = record_stage(std::move(trace), static_cast<Stage>(i), *other.at[i]);
  return trace;
}

LatencyReport latency_report(std::span<const LatencyTrace> traces) {
  std::vector<LatencyTrace> complete;
  for (const auto& t : traces)
    if (t.complete()) complete.push_back(t);
  if (complete.empty()) throw DomainError("latency_report: no complete traces");

  LatencyReport r;
  r.n_traces = complete.size();
  for (std::size_t i = 0; i + 1 < kStageCount; ++i) {
    const auto from = static_cast<Stage>(i);
    const auto to = static_cast<Stage>(i + 1);
    r.stages.push_back(span_stats(std::string(stage_name(from)) + " -> " + std::string(stage_name(to)), complete,
                                  from, to));
  }
  for (const auto& g : kBreakdown) r.breakdown.push_back(span_stats(g.name, complete, g.from, g.to));
  r.pixel_to_photon_ms = span_stats("pixel-to-photon", complete, Stage::Capture, Stage::RenderDone).ms;
  r.pose_update_fps = r.pixel_to_photon_ms.mean > 0.0 ? 1000.0 / r.pixel_to_photon_ms.mean : 0.0;
  return r;
}

std::string format_latency_report(const LatencyReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "pixel-to-photon latency over %zu frames: %.1f ± %.1f ms (%.2f FPS)\n",
                r.n_traces, r.pixel_to_photon_ms.mean, r.pixel_to_photon_ms.std, r.pose_update_fps);
  out << line << "\nbreakdown:\n";
  auto rows = [&](const std::vector<SpanStats>& spans) {
    for (const auto& s : spans) {
      if (s.n == 0) {
        std::snprintf(line, sizeof line, "  %-40s      n/a\n", s.name.c_str());
      } else {
        std::snprintf(line, sizeof line, "  %-40s %8.2f ± %6.2f ms  (n=%zu)\n", s.name.c_str(), s.ms.mean, s.ms.std,
                      s.n);
      }
      out << line;
    }
  };
  rows(r.breakdown);
  out << "\nstages:\n";
  rows(r.stages);
  return out.str();
}

nlohmann::json trace_to_json(const LatencyTrace& trace) {
  nlohmann::json j = {{"frame_id", trace.frame_id}};
  for (std::size_t i = 0; i < kStageCount; ++i)
    if (trace.at[i]) j[std::string(kStageNames[i])] = *trace.at[i];
  return j;
}

LatencyTrace trace_from_json(const nlohmann::json& j) {
  LatencyTrace t;
  t.frame_id = j.at("frame_id").get<std::uint32_t>();
  for (std::size_t i = 0; i < kStageCount; ++i) {
    const std::string key(kStageNames[i]);
    if (j.contains(key)) t = record_stage(std::move(t), static_cast<Stage>(i), j[key].get<std::uint64_t>());
  }
  return t;
}

}  // namespace egopose
