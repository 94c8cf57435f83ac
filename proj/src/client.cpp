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

#include "egopose/client.hpp"

#include <atomic>
#include <cstdio>
#include <thread>

#include "egopose/errors.hpp"
#include "egopose/frame_io.hpp"
#include "egopose/transport.hpp"

namespace egopose {

namespace {

using Clock = std::chrono::steady_clock;

std::chrono::nanoseconds seconds_to_ns(double s) {
  return std::chrono::nanoseconds(static_cast<std::int64_t>(s * 1e9));
}

void probe_server(UdpSocket& socket, const ClientConfig& config) {
  std::array<std::uint8_t, 64> buf{};
  for (int attempt = 1; attempt <= config.probe_attempts; ++attempt) {
    socket.send_to(kProbeRequest, config.server);
    const auto deadline = Clock::now() + config.probe_interval;
    while (Clock::now() < deadline) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      const auto got = socket.receive(buf, std::max(left, std::chrono::milliseconds(1)));
      if (got && got->size == kProbeReply.size() && std::equal(kProbeReply.begin(), kProbeReply.end(), buf.begin()))
        return;
    }
    log(LogLevel::Info, "server " + config.server.str() + " not answering (attempt " + std::to_string(attempt) + "/" +
                            std::to_string(config.probe_attempts) + ")");
  }
  throw ConnectionError("server " + config.server.str() + " unreachable after " +
                        std::to_string(config.probe_attempts) + " attempts");
}

void draw_points(FrameRGB& img, const Points3<double>& cam, const CameraIntrinsics& k, std::array<std::uint8_t, 3> rgb,
                 int radius) {
  for (Eigen::Index i = 0; i < cam.cols(); ++i) {
    if (cam(2, i) <= 0.0) continue;
    const Vector2<double> p = project_point(k, Vector3<double>(cam.col(i)));
    const long cx = std::lround(p.x());
    const long cy = std::lround(p.y());
    for (long y = cy - radius; y <= cy + radius; ++y)
      for (long x = cx - radius; x <= cx + radius; ++x)
        if (x >= 0 && y >= 0 && x < img.width && y < img.height)
          std::copy(rgb.begin(), rgb.end(), img.pixel(static_cast<int>(x), static_cast<int>(y)));
  }
}

}  // namespace

double projection_discrepancy_px(const Pose6DoF& a, const Pose6DoF& b, const ModelPoints& model,
                                 const CameraIntrinsics& k) {
  const Points3<double> pa = transform_points(a, model.points);
  const Points3<double> pb = transform_points(b, model.points);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < pa.cols(); ++i) {
    if (pa(2, i) <= 0.0 || pb(2, i) <= 0.0) continue;
    const double d = (project_point(k, Vector3<double>(pa.col(i))) - project_point(k, Vector3<double>(pb.col(i)))).norm();
    worst = std::max(worst, d);
  }
  return worst;
}

ClientResult run_client(const ClientConfig& config, FrameSource& source) {
  if (!(config.fps > 0.0)) throw ConfigError("fps must be positive");
  if (!(config.render_hz > 0.0)) throw ConfigError("render rate must be positive");
  if (config.overlay_dir) std::filesystem::create_directories(*config.overlay_dir);
  const CameraIntrinsics k = source.intrinsics();

  UdpSocket socket(0);
  probe_server(socket, config);
  LinkEmulator link(socket, config.server, config.link);

  std::mutex mu;
  std::map<std::uint32_t, LatencyTrace> traces;
  std::map<std::uint32_t, PoseRecord> truth;
  std::map<std::uint32_t, FrameYUV420> recent;  // overlay only
  ClientResult result;
  LatestSlot<PoseReturn> mailbox;
  std::atomic<bool> receiving{true};
  std::atomic<bool> rendering{true};
  std::atomic<std::uint32_t> received{0};

  std::thread receiver([&] {
    std::array<std::uint8_t, 2048> buf{};
    while (receiving.load()) {
      const auto got = socket.receive(buf, std::chrono::milliseconds(10));
      if (!got || got->size != kPoseReturnSize) continue;
      const std::uint64_t now = monotonic_us();
      const PoseReturn msg = decode_pose_return(std::span<const std::uint8_t>(buf.data(), got->size));
      {
        std::lock_guard lock(mu);
        auto it = traces.find(msg.frame_id);
        if (it == traces.end() || it->second.has(Stage::PoseReceived)) continue;
        it->second = record_stage(std::move(it->second), Stage::PoseReceived, now);
        result.received.push_back(PoseRecord{msg.frame_id, msg.pose, HandSkeleton21::Zero()});
      }
      ++received;
      mailbox.put(msg);
    }
  });

  std::thread renderer([&] {
    const auto period = std::chrono::duration_cast<Clock::duration>(seconds_to_ns(1.0 / config.render_hz));
    auto tick = Clock::now();
    while (rendering.load()) {
      tick += period;
      std::this_thread::sleep_until(tick);
      auto msg = mailbox.take();
      if (!msg) continue;
      if (config.render_ms > 0.0) std::this_thread::sleep_for(seconds_to_ns(config.render_ms / 1000.0));
      const std::uint64_t now = monotonic_us();
      std::optional<PoseRecord> gt;
      std::optional<FrameYUV420> frame;
      {
        std::lock_guard lock(mu);
        auto& trace = traces.at(msg->frame_id);
        trace = record_stage(std::move(trace), Stage::RenderDone, now);
        ++result.poses_rendered;
        if (auto it = truth.find(msg->frame_id); it != truth.end()) gt = it->second;
        if (auto it = recent.find(msg->frame_id); it != recent.end()) frame = it->second;
      }
      if (gt && config.model) {
        const double d = projection_discrepancy_px(gt->pose, msg->pose, *config.model, k);
        result.max_overlay_discrepancy_px = std::max(result.max_overlay_discrepancy_px.value_or(0.0), d);
      }
      if (config.overlay_dir && frame) {
        FrameRGB img = yuv420_to_rgb(*frame);
        if (config.model) {
          if (gt) draw_points(img, transform_points(gt->pose, config.model->points), k, {0, 220, 0}, 2);
          draw_points(img, transform_points(msg->pose, config.model->points), k, {230, 20, 20}, 0);
        }
        char name[32];
        std::snprintf(name, sizeof name, "overlay_%06u.ppm", msg->frame_id);
        write_ppm(img, *config.overlay_dir / name);
        ++result.overlays_written;
      }
    }
  });

  auto shutdown = [&] {
    rendering = false;
    receiving = false;
    renderer.join();
    receiver.join();
  };

  try {
    const auto period = seconds_to_ns(1.0 / config.fps);
    const auto start = Clock::now();
    for (std::uint32_t n = 0;; ++n) {
      if (config.max_frames != 0 && n >= config.max_frames) break;
      if (config.duration_s > 0.0 && static_cast<double>(n) / config.fps >= config.duration_s) break;
      std::this_thread::sleep_until(start + period * n);
      auto next = source.next();
      if (!next) break;
      FrameYUV420& frame = next->frame;
      LatencyTrace trace;
      trace.frame_id = frame.frame_id;
      frame.capture_timestamp_us = monotonic_us();
      trace = record_stage(std::move(trace), Stage::Capture, frame.capture_timestamp_us);
      const auto packets = chunk_frame(frame);
      trace = record_stage(std::move(trace), Stage::FirstPacketSent, monotonic_us());
      {
        std::lock_guard lock(mu);
        traces[frame.frame_id] = trace;
        if (next->ground_truth) {
          truth[frame.frame_id] = *next->ground_truth;
          result.ground_truth.push_back(*next->ground_truth);
        }
        if (config.overlay_dir) {
          recent[frame.frame_id] = frame;
          while (recent.size() > 8) recent.erase(recent.begin());
        }
      }
      for (const auto& p : packets) link.submit(p.serialize());
      ++result.frames_sent;
    }
    link.flush();
    const auto deadline = Clock::now() + config.drain_timeout;
    while (received.load() < result.frames_sent && Clock::now() < deadline)
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    // Let the render loop pick up the final pose.
    std::this_thread::sleep_for(seconds_to_ns(2.0 / config.render_hz + config.render_ms / 1000.0) +
                                std::chrono::milliseconds(5));
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();

  result.poses_received = received.load();
  result.packets_dropped = link.dropped();
  result.mailbox_overwrites = mailbox.overwritten();
  for (auto& [id, t] : traces) result.traces.push_back(t);
  return result;
}

}  // namespace egopose
