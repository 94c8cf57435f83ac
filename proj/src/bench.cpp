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

#include "egopose/bench.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "egopose/metrics.hpp"

namespace egopose {

BenchResult run_bench(const BenchConfig& config) {
  const AnchorGrid grid = generate_anchors(kNetworkInputSize, kNetworkInputSize, config.anchors);
  const std::uint64_t seed = config.seed;
  const CameraIntrinsics k = config.intrinsics;
  auto backend = std::make_shared<SyntheticBackend>(
      grid, [seed, k](std::uint32_t id) { return scripted_pose(seed, id, k); });

  ServerConfig sc;
  sc.port = 0;
  sc.loopback_only = true;
  sc.intrinsics = k;
  sc.preprocess = config.preprocess;
  sc.filter = config.filter;
  sc.infer_delay_ms = config.infer_delay_ms;
  Server server(sc, backend);
  server.start();

  ClientConfig cc;
  cc.server = Endpoint::loopback(server.port());
  cc.fps = config.fps;
  cc.max_frames = config.frames;
  cc.link = LinkConfig{config.loss_rate, config.delay_ms, seed};
  cc.render_hz = config.render_hz;
  cc.render_ms = config.render_ms;
  cc.model = config.model;
  cc.drain_timeout = std::chrono::milliseconds(1500 + static_cast<int>(config.delay_ms + 4 * config.infer_delay_ms));
  SyntheticSource source(seed, k, config.model, config.frames);

  BenchResult r;
  try {
    r.client = run_client(cc, source);
  } catch (...) {
    server.stop();
    throw;
  }
  server.stop();
  r.server = server.stats();

  std::map<std::uint32_t, LatencyTrace> server_traces;
  for (const auto& t : server.traces()) server_traces[t.frame_id] = t;
  for (const auto& t : r.client.traces) {
    LatencyTrace merged = t;
    if (auto it = server_traces.find(t.frame_id); it != server_traces.end()) {
      try {
        merged = merge_traces(merged, it->second);
      } catch (const InstrumentationError& e) {
        r.warnings.push_back(e.what());
      }
    }
    if (merged.complete()) ++r.completed;
    r.traces.push_back(merged);
  }

  for (const auto& p : r.client.received)
    r.max_tool_add_m = std::max(r.max_tool_add_m, add_tool(scripted_pose(seed, p.frame_id, k).pose, p.pose, config.model));
  for (const auto& p : server.predictions())
    r.max_hand_add_m = std::max(r.max_hand_add_m, add_hand(scripted_pose(seed, p.frame_id, k).hand, p.hand));

  if (r.completed < config.frames)
    r.warnings.push_back("only " + std::to_string(r.completed) + " of " + std::to_string(config.frames) +
                         " frames completed a round trip; report covers the completed subset");
  if (r.completed > 0) r.report = latency_report(r.traces);
  return r;
}

std::string format_bench_result(const BenchConfig& config, const BenchResult& r) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof line,
                "bench: %u frames @ %.1f fps, %dx%d, loss %.1f%%, delay %.1f ms, inference delay %.1f ms\n",
                config.frames, config.fps, config.intrinsics.width, config.intrinsics.height, 100.0 * config.loss_rate,
                config.delay_ms, config.infer_delay_ms);
  out << line;
  std::snprintf(line, sizeof line,
                "sent %u, poses received %u, rendered %u, complete traces %zu, packets dropped %llu, "
                "server queue drops %llu\n",
                r.client.frames_sent, r.client.poses_received, r.client.poses_rendered, r.completed,
                static_cast<unsigned long long>(r.client.packets_dropped),
                static_cast<unsigned long long>(r.server.frames_dropped));
  out << line;
  std::snprintf(line, sizeof line, "max tool ADD vs script: %.3e mm, max hand ADD vs script: %.3e mm\n",
                r.max_tool_add_m * 1000.0, r.max_hand_add_m * 1000.0);
  out << line;
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  if (r.report) out << '\n' << format_latency_report(*r.report);
  return out.str();
}

}  // namespace egopose
