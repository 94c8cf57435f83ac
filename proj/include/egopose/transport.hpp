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

// Client/server wire protocol.
//
// Frame datagram (little-endian, 21-byte header):
//   0  u8[2] magic 0xEB 0x90
//   2  u8    version (1)
//   3  u32   frame_id
//   7  u64   capture_timestamp_us
//   15 u16   chunk_index
//   17 u16   chunk_count
//   19 u16   payload_len
//   21 ...   payload (<= 1200 bytes)
//
// Pose return (36 bytes): u32 frame_id, u64 server send time (us), then the
// 24-byte pose core of six float32 values r_x r_y r_z t_x t_y t_z.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "egopose/geometry.hpp"
#include "egopose/preprocess.hpp"

namespace egopose {

inline constexpr std::uint8_t kPacketMagic0 = 0xEB;
inline constexpr std::uint8_t kPacketMagic1 = 0x90;
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kPacketHeaderSize = 21;
inline constexpr std::size_t kMaxPayload = 1200;
inline constexpr std::size_t kPoseMessageSize = 24;
inline constexpr std::size_t kPoseReturnSize = 36;

namespace le {

template <typename T>
void store(std::uint8_t* dst, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  std::memcpy(dst, raw, sizeof(T));
}

template <typename T>
T load(const std::uint8_t* src) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace le

struct FramePacket {
  std::uint32_t frame_id = 0;
  std::uint64_t capture_timestamp_us = 0;
  std::uint16_t chunk_index = 0;
  std::uint16_t chunk_count = 0;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> serialize() const;
  /// Throws ProtocolError on bad magic/version, truncated or inconsistent header.
  static FramePacket parse(std::span<const std::uint8_t> datagram);
  bool operator==(const FramePacket&) const = default;
};

enum class PayloadKind : std::uint8_t { RawI420 = 0, Opaque = 1 };

/// Frame payload: u8 kind, u16 width, u16 height, then Y, U, V planes.
std::vector<std::uint8_t> serialize_frame(const FrameYUV420& frame);
/// Payload carrying an externally compressed bitstream, not interpreted.
std::vector<std::uint8_t> wrap_opaque(std::span<const std::uint8_t> bitstream);
PayloadKind payload_kind(std::span<const std::uint8_t> payload);
FrameYUV420 deserialize_frame(std::span<const std::uint8_t> payload, std::uint32_t frame_id,
                              std::uint64_t capture_timestamp_us);

/// Splits `bytes` into ceil(n / 1200) packets sharing frame_id and timestamp.
std::vector<FramePacket> chunk_payload(std::uint32_t frame_id, std::uint64_t capture_timestamp_us,
                                       std::span<const std::uint8_t> bytes);
std::vector<FramePacket> chunk_frame(const FrameYUV420& frame);

struct CompletedFrame {
  std::uint32_t frame_id = 0;
  std::uint64_t capture_timestamp_us = 0;
  std::vector<std::uint8_t> payload;
};

struct ReassemblerStats {
  std::uint64_t packets = 0;
  std::uint64_t malformed = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t stale_packets = 0;
  std::uint64_t frames_emitted = 0;
  std::uint64_t frames_discarded = 0;
};

/// Latest-wins frame reassembly over an unreliable datagram channel.
///
/// A frame is emitted once, when its last missing chunk arrives. Emitting a
/// frame discards every older incomplete frame, and packets for frames at or
/// before the last emitted id are dropped. At most two frames are buffered;
/// starting a third evicts the oldest. Single writer.
class Reassembler {
 public:
  static constexpr std::size_t kMaxBufferedFrames = 2;

  std::optional<CompletedFrame> push(std::span<const std::uint8_t> datagram);
  std::optional<CompletedFrame> push(const FramePacket& packet);

  const ReassemblerStats& stats() const { return stats_; }
  std::size_t buffered_frames() const { return partial_.size(); }
  std::optional<std::uint32_t> last_emitted() const { return last_emitted_; }
  /// Drops all partial frames and forgets the last emitted id.
  void reset();

 private:
  struct Partial {
    std::uint32_t frame_id = 0;
    std::uint64_t capture_timestamp_us = 0;
    std::vector<std::vector<std::uint8_t>> chunks;
    std::vector<bool> received;
    std::size_t missing = 0;
  };

  std::vector<Partial> partial_;
  std::optional<std::uint32_t> last_emitted_;
  ReassemblerStats stats_;
};

using PoseMessage = std::array<std::uint8_t, kPoseMessageSize>;

PoseMessage encode_pose_message(const Pose6DoF& pose);
/// Throws ProtocolError unless exactly 24 bytes.
Pose6DoF decode_pose_message(std::span<const std::uint8_t> bytes);

struct PoseReturn {
  std::uint32_t frame_id = 0;
  std::uint64_t server_send_us = 0;
  Pose6DoF pose;
};

std::array<std::uint8_t, kPoseReturnSize> encode_pose_return(const PoseReturn& msg);
/// Throws ProtocolError unless exactly 36 bytes.
PoseReturn decode_pose_return(std::span<const std::uint8_t> bytes);

}  // namespace egopose
