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

#include "egopose/server.hpp"

#include <algorithm>

#include "egopose/errors.hpp"

namespace egopose {

Server::Server(ServerConfig config, std::shared_ptr<InferenceBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)), socket_(config_.port, config_.loopback_only) {
  config_.intrinsics.validate();
  if (!backend_) throw ConfigError("server needs an inference backend");
  if (backend_->grid().image_width != kNetworkInputSize || backend_->grid().image_height != kNetworkInputSize)
    throw ConfigError("backend anchor grid must tile the 256x256 network input");
  if (config_.queue_capacity == 0) throw ConfigError("queue capacity must be at least 1");
  if (config_.infer_delay_ms < 0.0) throw ConfigError("inference delay must be non-negative");
}

Server::~Server() { stop(); }

void Server::start() {
  if (running_.exchange(true)) return;
  receiver_ = std::thread([this] { receive_loop(); });
  worker_ = std::thread([this] { worker_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  cv_.notify_all();
  if (receiver_.joinable()) receiver_.join();
  if (worker_.joinable()) worker_.join();
}

void Server::run(const std::atomic<bool>& stop_flag) {
  start();
  log(LogLevel::Info, "serving on port " + std::to_string(port()));
  while (!stop_flag.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  stop();
}

ServerStats Server::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::vector<LatencyTrace> Server::traces() const {
  std::lock_guard lock(mu_);
  return traces_;
}

std::vector<PoseRecord> Server::predictions() const {
  std::lock_guard lock(mu_);
  return predictions_;
}

void Server::receive_loop() {
  std::vector<std::uint8_t> buf(65536);
  std::optional<Endpoint> client;
  auto last_packet = std::chrono::steady_clock::now();

  auto end_session = [&] {
    reassembler_.reset();
    client.reset();
    idle_ = true;
  };

  while (running_.load()) {
    const auto got = socket_.receive(buf, std::chrono::milliseconds(20));
    const auto now = std::chrono::steady_clock::now();
    if (!got) {
      if (client && now - last_packet > config_.idle_timeout) {
        log(LogLevel::Info, "client " + client->str() + " idle, returning to idle state");
        end_session();
        std::lock_guard lock(mu_);
        ++stats_.idle_resets;
      }
      continue;
    }
    last_packet = now;
    const std::span<const std::uint8_t> datagram(buf.data(), got->size);

    if (std::equal(datagram.begin(), datagram.end(), kProbeRequest.begin(), kProbeRequest.end())) {
      // A probe starts a fresh session for that client.
      end_session();
      socket_.send_to(kProbeReply, got->from);
      std::lock_guard lock(mu_);
      ++stats_.probes;
      continue;
    }
    if (client && !(*client == got->from)) {
      log(LogLevel::Info, "new client " + got->from.str() + " replaces " + client->str());
      end_session();
    }
    if (!client) {
      client = got->from;
      idle_ = false;
      std::lock_guard lock(mu_);
      ++stats_.sessions;
    }

    auto done = reassembler_.push(datagram);
    std::lock_guard lock(mu_);
    stats_.reassembly = reassembler_.stats();
    if (!done) continue;
    if (queue_.size() >= config_.queue_capacity) {
      log(LogLevel::Debug, "dropping stale frame " + std::to_string(queue_.front().frame.frame_id));
      queue_.pop_front();
      ++stats_.frames_dropped;
    }
    queue_.push_back(Job{std::move(*done), monotonic_us(), *client});
    ++stats_.frames_queued;
    stats_.max_queue_depth = std::max(stats_.max_queue_depth, queue_.size());
    cv_.notify_one();
  }
}

void Server::worker_loop() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return !running_.load() || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    process(std::move(job));
  }
}

void Server::process(Job job) {
  const std::uint32_t id = job.frame.frame_id;
  LatencyTrace trace;
  trace.frame_id = id;
  std::optional<PoseRecord> prediction;
  bool failed = false;
  bool detected = false;
  try {
    trace = record_stage(std::move(trace), Stage::FrameComplete, job.complete_us);
    const FrameYUV420 frame = deserialize_frame(job.frame.payload, id, job.frame.capture_timestamp_us);
    const auto [tensor, network_k] = preprocess(frame, config_.intrinsics, config_.preprocess);
    trace = record_stage(std::move(trace), Stage::PreprocessDone, monotonic_us());

    const RawHeads heads = backend_->infer(tensor, InferenceContext{id, network_k});
    if (config_.infer_delay_ms > 0.0)
      std::this_thread::sleep_for(std::chrono::microseconds(static_cast<std::int64_t>(config_.infer_delay_ms * 1000.0)));
    trace = record_stage(std::move(trace), Stage::InferenceDone, monotonic_us());

    const auto best = filter_detections(decode_heads(heads, backend_->grid(), network_k, config_.filter.score_threshold),
                                        config_.filter, backend_->grid());
    trace = record_stage(std::move(trace), Stage::FilterDone, monotonic_us());

    if (best) {
      detected = true;
      PoseReturn msg;
      msg.frame_id = id;
      msg.pose = best->pose;
      msg.server_send_us = monotonic_us();
      trace = record_stage(std::move(trace), Stage::PoseSent, msg.server_send_us);
      socket_.send_to(encode_pose_return(msg), job.reply_to);
      prediction = PoseRecord{id, best->pose, best->hand};
    }
  } catch (const std::exception& e) {
    failed = true;
    log(LogLevel::Warn, "frame " + std::to_string(id) + " skipped: " + e.what());
  }

  std::lock_guard lock(mu_);
  ++stats_.frames_processed;
  if (failed) {
    ++stats_.frame_errors;
  } else if (!detected) {
    ++stats_.no_detection;
  } else {
    ++stats_.poses_sent;
  }
  if (config_.keep_history) {
    traces_.push_back(trace);
    if (prediction) predictions_.push_back(*prediction);
  }
}

}  // namespace egopose
