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

#include <cmath>

#include "doctest.h"
#include "egopose/latency.hpp"
#include "support.hpp"

using namespace egopose;
using egopose::testing::Rng;

namespace {

LatencyTrace full_trace(std::uint32_t id, std::uint64_t t0, const std::array<std::uint64_t, kStageCount - 1>& spans) {
  LatencyTrace t;
  t.frame_id = id;
  std::uint64_t now = t0;
  t = record_stage(t, Stage::Capture, now);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    now += spans[i];
    t = record_stage(t, static_cast<Stage>(i + 1), now);
  }
  return t;
}

}  // namespace

TEST_CASE("stage names") {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    const auto s = static_cast<Stage>(i);
    CHECK(stage_from_name(stage_name(s)) == s);
  }
  CHECK(stage_name(Stage::RenderDone) == "render_done");
  CHECK_FALSE(stage_from_name("nope"));
}

TEST_CASE("record_stage") {
  LatencyTrace t;
  t = record_stage(t, Stage::Capture, 1000);
  t = record_stage(t, Stage::RenderDone, 200100);
  CHECK(t.pixel_to_photon() == 199100);
  CHECK(t.complete());
  CHECK_THROWS_AS(record_stage(t, Stage::Capture, 1000), InstrumentationError);
  // Out of order against an earlier or a later stage.
  CHECK_THROWS_AS(record_stage(t, Stage::PreprocessDone, 999), InstrumentationError);
  CHECK_THROWS_AS(record_stage(t, Stage::PreprocessDone, 200101), InstrumentationError);
  // Equal timestamps are fine.
  CHECK_NOTHROW(record_stage(t, Stage::PreprocessDone, 1000));

  LatencyTrace a;
  a.frame_id = 3;
  a = record_stage(a, Stage::Capture, 10);
  LatencyTrace b;
  b.frame_id = 3;
  b = record_stage(b, Stage::FrameComplete, 50);
  const LatencyTrace m = merge_traces(a, b);
  CHECK(m.span(Stage::Capture, Stage::FrameComplete) == 40);
  b.frame_id = 4;
  CHECK_THROWS_AS(merge_traces(a, b), InstrumentationError);
}

TEST_CASE("spans telescope to pixel-to-photon") {
  Rng rng(71);
  for (int n = 0; n < 1000; ++n) {
    std::array<std::uint64_t, kStageCount - 1> spans{};
    for (auto& s : spans) s = static_cast<std::uint64_t>(rng.integer(0, 100000));
    const LatencyTrace t = full_trace(1, static_cast<std::uint64_t>(rng.integer(0, 1 << 30)), spans);
    std::int64_t sum = 0;
    for (std::size_t i = 0; i + 1 < kStageCount; ++i)
      sum += *t.span(static_cast<Stage>(i), static_cast<Stage>(i + 1));
    CHECK(sum == *t.pixel_to_photon());
  }
}

TEST_CASE("latency_report") {
  CHECK_THROWS_AS(latency_report(std::vector<LatencyTrace>{}), DomainError);
  LatencyTrace partial;
  partial = record_stage(partial, Stage::Capture, 5);
  CHECK_THROWS_AS(latency_report(std::vector<LatencyTrace>{partial}), DomainError);

  // Single trace: means equal the spans, stds are zero.
  const std::array<std::uint64_t, 8> spans{2000, 158000, 6000, 12000, 1000, 1000, 7000, 16000};
  const std::vector<LatencyTrace> one{full_trace(0, 1000, spans)};
  const LatencyReport r1 = latency_report(one);
  CHECK(r1.n_traces == 1);
  CHECK(r1.pixel_to_photon_ms.mean == doctest::Approx(203.0));
  CHECK(r1.pixel_to_photon_ms.std == 0.0);
  REQUIRE(r1.breakdown.size() == 5);
  CHECK(r1.breakdown[0].ms.mean == doctest::Approx(160.0));
  CHECK(r1.breakdown[1].ms.mean == doctest::Approx(6.0));
  CHECK(r1.breakdown[2].ms.mean == doctest::Approx(13.0));
  CHECK(r1.breakdown[3].ms.mean == doctest::Approx(8.0));
  CHECK(r1.breakdown[4].ms.mean == doctest::Approx(16.0));
  for (const auto& s : r1.stages) CHECK(s.ms.std == 0.0);
  double total = 0.0;
  for (const auto& s : r1.breakdown) total += s.ms.mean;
  CHECK(total == doctest::Approx(r1.pixel_to_photon_ms.mean));

  // Constructed spans: two traces with known mean and population std.
  std::vector<LatencyTrace> two{full_trace(0, 0, spans), full_trace(1, 0, spans)};
  two[1] = LatencyTrace{};
  two[1].frame_id = 1;
  two[1] = record_stage(two[1], Stage::Capture, 0);
  two[1] = record_stage(two[1], Stage::RenderDone, 100000);
  const LatencyReport r2 = latency_report(two);
  CHECK(r2.pixel_to_photon_ms.mean == doctest::Approx(151.5));
  CHECK(r2.pixel_to_photon_ms.std == doctest::Approx(51.5));
  CHECK(r2.breakdown[0].n == 1);

  // 100 traces averaging 199.1 ms.
  std::vector<LatencyTrace> hundred;
  for (std::uint32_t i = 0; i < 100; ++i) {
    LatencyTrace t;
    t.frame_id = i;
    t = record_stage(t, Stage::Capture, 0);
    t = record_stage(t, Stage::RenderDone, i % 2 == 0 ? 169100 : 229100);
    hundred.push_back(t);
  }
  const LatencyReport r3 = latency_report(hundred);
  CHECK(r3.pixel_to_photon_ms.mean == doctest::Approx(199.1));
  CHECK(r3.pose_update_fps == doctest::Approx(5.02).epsilon(0.001));
  CHECK(std::abs(r3.pose_update_fps - 1000.0 / 199.1) < 1e-9);

  const std::string text = format_latency_report(r3);
  CHECK(text.find("199.1") != std::string::npos);
  CHECK(text.find("5.02 FPS") != std::string::npos);
  CHECK(text.find("n/a") != std::string::npos);
}

TEST_CASE("trace json") {
  const std::array<std::uint64_t, 8> spans{1, 2, 3, 4, 5, 6, 7, 8};
  const LatencyTrace t = full_trace(42, 1700000000000000ull, spans);
  const auto j = trace_to_json(t);
  CHECK(j.at("frame_id") == 42);
  CHECK(j.at("capture") == 1700000000000000ull);
  const LatencyTrace back = trace_from_json(j);
  CHECK(back.at == t.at);
  CHECK(back.frame_id == 42);

  nlohmann::json bad = j;
  bad["render_done"] = 0;
  CHECK_THROWS_AS(trace_from_json(bad), InstrumentationError);
}
