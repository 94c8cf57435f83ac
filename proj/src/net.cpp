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

#include "egopose/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>
#include <system_error>

#include "egopose/errors.hpp"

namespace egopose {

namespace {

std::atomic<int> g_log_level{static_cast<int>(LogLevel::Warn)};
std::mutex g_log_mu;

constexpr const char* kLevelNames[] = {"error", "warn", "info", "debug"};

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

}  // namespace

void set_log_level(LogLevel level) { g_log_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_log_level.load()); }

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > g_log_level.load()) return;
  std::lock_guard lock(g_log_mu);
  std::cerr << "[" << kLevelNames[static_cast<int>(level)] << "] " << msg << '\n';
}

std::uint64_t monotonic_us() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

Endpoint Endpoint::parse(const std::string& text) {
  std::string host = "127.0.0.1";
  std::string port_text = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port <= 0 || port > 65535) throw ConfigError("invalid port in endpoint '" + text + "'");

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw ConfigError("cannot resolve host '" + host + "'");
  Endpoint e;
  std::memcpy(&e.addr, res->ai_addr, sizeof(sockaddr_in));
  ::freeaddrinfo(res);
  e.addr.sin_port = htons(static_cast<std::uint16_t>(port));
  return e;
}

Endpoint Endpoint::loopback(std::uint16_t port) {
  Endpoint e;
  e.addr.sin_family = AF_INET;
  e.addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  e.addr.sin_port = htons(port);
  return e;
}

std::uint16_t Endpoint::port() const { return ntohs(addr.sin_port); }

std::string Endpoint::str() const {
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(port());
}

bool Endpoint::operator==(const Endpoint& o) const {
  return addr.sin_addr.s_addr == o.addr.sin_addr.s_addr && addr.sin_port == o.addr.sin_port;
}

UdpSocket::UdpSocket(std::uint16_t port, bool loopback_only) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw_errno("socket");
  int size = kSocketBufferBytes;
  // Best effort: the kernel clamps to rmem_max / wmem_max.
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &size, sizeof size);
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &size, sizeof size);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
  a.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0) {
    const int err = errno;
    ::close(fd_);
    throw std::system_error(err, std::generic_category(), "bind port " + std::to_string(port));
  }
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

std::uint16_t UdpSocket::local_port() const {
  sockaddr_in a{};
  socklen_t len = sizeof a;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&a), &len) != 0) throw_errno("getsockname");
  return ntohs(a.sin_port);
}

bool UdpSocket::send_to(std::span<const std::uint8_t> bytes, const Endpoint& to) {
  for (;;) {
    const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to.addr),
                            sizeof to.addr);
    if (n >= 0) return static_cast<std::size_t>(n) == bytes.size();
    if (errno == EINTR) continue;
    if (errno == ENOBUFS || errno == EAGAIN) {
      // Socket send buffer full: yield briefly instead of dropping.
      std::this_thread::sleep_for(std::chrono::microseconds(50));
      continue;
    }
    return false;
  }
}

std::optional<UdpSocket::Received> UdpSocket::receive(std::span<std::uint8_t> buffer,
                                                      std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (r < 0) {
    if (errno == EINTR) return std::nullopt;
    throw_errno("poll");
  }
  if (r == 0) return std::nullopt;
  Received out;
  socklen_t len = sizeof out.from.addr;
  const auto n = ::recvfrom(fd_, buffer.data(), buffer.size(), 0, reinterpret_cast<sockaddr*>(&out.from.addr), &len);
  if (n < 0) {
    // ECONNREFUSED surfaces ICMP errors from earlier sends; not fatal.
    if (errno == EINTR || errno == EAGAIN || errno == ECONNREFUSED) return std::nullopt;
    throw_errno("recvfrom");
  }
  out.size = static_cast<std::size_t>(n);
  return out;
}

LinkEmulator::LinkEmulator(UdpSocket& socket, Endpoint to, LinkConfig config)
    : socket_(socket), to_(to), config_(config), rng_(config.seed), lose_(config.loss_rate) {
  if (config.loss_rate < 0.0 || config.loss_rate >= 1.0) throw ConfigError("loss rate must be in [0, 1)");
  if (config.delay_ms < 0.0) throw ConfigError("link delay must be non-negative");
  thread_ = std::thread([this] { loop(); });
}

LinkEmulator::~LinkEmulator() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

void LinkEmulator::submit(std::vector<std::uint8_t> datagram) {
  const auto due = std::chrono::steady_clock::now() +
                   std::chrono::microseconds(static_cast<std::int64_t>(config_.delay_ms * 1000.0));
  {
    std::lock_guard lock(mu_);
    queue_.push_back({due, std::move(datagram)});
  }
  cv_.notify_one();
}

void LinkEmulator::flush() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return queue_.empty(); });
}

void LinkEmulator::loop() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) {
      if (stopping_) return;
      continue;
    }
    const auto due = queue_.front().due;
    if (!stopping_ && std::chrono::steady_clock::now() < due) {
      cv_.wait_until(lock, due);
      continue;
    }
    Pending p = std::move(queue_.front());
    queue_.pop_front();
    const bool drop = lose_(rng_);
    lock.unlock();
    if (drop) {
      ++dropped_;
    } else if (socket_.send_to(p.bytes, to_)) {
      ++sent_;
    }
    lock.lock();
    if (queue_.empty()) idle_cv_.notify_all();
  }
}

}  // namespace egopose
