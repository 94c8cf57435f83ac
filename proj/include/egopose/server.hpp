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

// Pose server: receive/reassemble -> preprocess/infer/decode -> return.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "egopose/backend.hpp"
#include "egopose/detection.hpp"
#include "egopose/io.hpp"
#include "egopose/latency.hpp"
#include "egopose/net.hpp"
#include "egopose/preprocess.hpp"
#include "egopose/transport.hpp"

namespace egopose {

struct ServerConfig {
  std::uint16_t port = 5600;
  bool loopback_only = false;
  /// Intrinsics of the incoming frames.
  CameraIntrinsics intrinsics;
  PreprocessConfig preprocess;
  FilterParams filter;
  /// Extra latency added after every inference call.
  double infer_delay_ms = 0.0;
  /// Frames waiting for the worker; the oldest is dropped when full.
  std::size_t queue_capacity = 2;
  /// No packets for this long ends the session and resets reassembly.
  std::chrono::milliseconds idle_timeout{2000};
  /// Keep per-frame predictions and traces in memory (tests, bench).
  bool keep_history = true;
};

struct ServerStats {
  ReassemblerStats reassembly;
  std::uint64_t probes = 0;
  std::uint64_t frames_queued = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t frames_processed = 0;
  std::uint64_t frame_errors = 0;
  std::uint64_t no_detection = 0;
  std::uint64_t poses_sent = 0;
  std::uint64_t sessions = 0;
  std::uint64_t idle_resets = 0;
  std::size_t max_queue_depth = 0;
};

class Server {
 public:
  /// Binds the socket; throws std::system_error on bind failure and
  /// ConfigError on invalid configuration.
  Server(ServerConfig config, std::shared_ptr<InferenceBackend> backend);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return socket_.local_port(); }

  void start();
  /// Stops both threads; safe to call more than once.
  void stop();
  /// start(), then block until `stop_flag` becomes true.
  void run(const std::atomic<bool>& stop_flag);

  ServerStats stats() const;
  /// Server-side stages: frame_complete .. pose_sent.
  std::vector<LatencyTrace> traces() const;
  std::vector<PoseRecord> predictions() const;
  bool idle() const { return idle_.load(); }

 private:
  struct Job {
    CompletedFrame frame;
    std::uint64_t complete_us = 0;
    Endpoint reply_to;
  };

  void receive_loop();
  void worker_loop();
  void process(Job job);

  ServerConfig config_;
  std::shared_ptr<InferenceBackend> backend_;
  UdpSocket socket_;
  Reassembler reassembler_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Job> queue_;
  ServerStats stats_;
  std::vector<LatencyTrace> traces_;
  std::vector<PoseRecord> predictions_;

  std::atomic<bool> running_{false};
  std::atomic<bool> idle_{true};
  std::thread receiver_;
  std::thread worker_;
};

}  // namespace egopose
