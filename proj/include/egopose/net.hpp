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

// UDP sockets, a lossy/delayed link emulator and small logging helpers.

#pragma once

#include <netinet/in.h>

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace egopose {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log(LogLevel level, const std::string& msg);

/// Microseconds on the process-wide monotonic clock. Every stage timestamp
/// uses this clock.
std::uint64_t monotonic_us();

struct Endpoint {
  sockaddr_in addr{};

  /// "host:port" or "port" (loopback). Throws ConfigError.
  static Endpoint parse(const std::string& text);
  static Endpoint loopback(std::uint16_t port);
  std::uint16_t port() const;
  std::string str() const;
  bool operator==(const Endpoint& o) const;
};

inline constexpr int kSocketBufferBytes = 4 * 1024 * 1024;

class UdpSocket {
 public:
  /// Binds to `port` on all interfaces (0 picks an ephemeral port), or to
  /// loopback only. Throws std::system_error.
  explicit UdpSocket(std::uint16_t port = 0, bool loopback_only = false);
  ~UdpSocket();
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  std::uint16_t local_port() const;

  /// Returns false when the kernel refuses the datagram (buffer full etc).
  bool send_to(std::span<const std::uint8_t> bytes, const Endpoint& to);

  struct Received {
    std::size_t size = 0;
    Endpoint from;
  };
  /// Waits up to `timeout`; nullopt on timeout.
  std::optional<Received> receive(std::span<std::uint8_t> buffer, std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
};

struct LinkConfig {
  double loss_rate = 0.0;
  double delay_ms = 0.0;
  std::uint64_t seed = 1;
};

/// Forwards datagrams after a fixed delay, dropping each independently with
/// probability `loss_rate`. Packets keep their submission order.
class LinkEmulator {
 public:
  LinkEmulator(UdpSocket& socket, Endpoint to, LinkConfig config);
  ~LinkEmulator();
  LinkEmulator(const LinkEmulator&) = delete;
  LinkEmulator& operator=(const LinkEmulator&) = delete;

  void submit(std::vector<std::uint8_t> datagram);
  /// Blocks until every submitted packet left or was dropped.
  void flush();

  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  struct Pending {
    std::chrono::steady_clock::time_point due;
    std::vector<std::uint8_t> bytes;
  };
  void loop();

  UdpSocket& socket_;
  Endpoint to_;
  LinkConfig config_;
  std::mt19937_64 rng_;
  std::bernoulli_distribution lose_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Pending> queue_;
  bool stopping_ = false;
  std::atomic<std::uint64_t> sent_{0};
  std::atomic<std::uint64_t> dropped_{0};
  std::thread thread_;
};

/// Handshake datagrams used by the client to check the server is up. Their
/// protocol version byte is 0, so a frame reassembler rejects them.
inline constexpr std::array<std::uint8_t, 4> kProbeRequest{0xEB, 0x90, 0x00, 'P'};
inline constexpr std::array<std::uint8_t, 4> kProbeReply{0xEB, 0x90, 0x00, 'A'};

}  // namespace egopose
