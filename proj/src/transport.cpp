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

#include "egopose/transport.hpp"

#include <string>

namespace egopose {

namespace {

constexpr std::size_t kFrameHeaderSize = 5;

}  // namespace

std::vector<std::uint8_t> FramePacket::serialize() const {
  std::vector<std::uint8_t> out(kPacketHeaderSize + payload.size());
  std::uint8_t* p = out.data();
  p[0] = kPacketMagic0;
  p[1] = kPacketMagic1;
  p[2] = kProtocolVersion;
  le::store<std::uint32_t>(p + 3, frame_id);
  le::store<std::uint64_t>(p + 7, capture_timestamp_us);
  le::store<std::uint16_t>(p + 15, chunk_index);
  le::store<std::uint16_t>(p + 17, chunk_count);
  le::store<std::uint16_t>(p + 19, static_cast<std::uint16_t>(payload.size()));
  std::copy(payload.begin(), payload.end(), out.begin() + kPacketHeaderSize);
  return out;
}

FramePacket FramePacket::parse(std::span<const std::uint8_t> d) {
  if (d.size() < kPacketHeaderSize) throw ProtocolError("packet shorter than header");
  if (d[0] != kPacketMagic0 || d[1] != kPacketMagic1) throw ProtocolError("bad packet magic");
  if (d[2] != kProtocolVersion) throw ProtocolError("unsupported protocol version " + std::to_string(d[2]));
  FramePacket p;
  p.frame_id = le::load<std::uint32_t>(d.data() + 3);
  p.capture_timestamp_us = le::load<std::uint64_t>(d.data() + 7);
  p.chunk_index = le::load<std::uint16_t>(d.data() + 15);
  p.chunk_count = le::load<std::uint16_t>(d.data() + 17);
  const auto len = le::load<std::uint16_t>(d.data() + 19);
  if (p.chunk_count == 0 || p.chunk_index >= p.chunk_count) throw ProtocolError("chunk index out of range");
  if (len > kMaxPayload) throw ProtocolError("payload exceeds 1200 bytes");
  if (d.size() != kPacketHeaderSize + len) throw ProtocolError("payload length does not match datagram size");
  p.payload.assign(d.begin() + kPacketHeaderSize, d.end());
  return p;
}

std::vector<std::uint8_t> serialize_frame(const FrameYUV420& frame) {
  frame.validate();
  if (frame.width > 0xFFFF || frame.height > 0xFFFF) throw StructuralError("frame too large for wire format");
  std::vector<std::uint8_t> out(kFrameHeaderSize + frame.y.size() + frame.u.size() + frame.v.size());
  out[0] = static_cast<std::uint8_t>(PayloadKind::RawI420);
  le::store<std::uint16_t>(out.data() + 1, static_cast<std::uint16_t>(frame.width));
  le::store<std::uint16_t>(out.data() + 3, static_cast<std::uint16_t>(frame.height));
  auto it = out.begin() + kFrameHeaderSize;
  it = std::copy(frame.y.begin(), frame.y.end(), it);
  it = std::copy(frame.u.begin(), frame.u.end(), it);
  std::copy(frame.v.begin(), frame.v.end(), it);
  return out;
}

std::vector<std::uint8_t> wrap_opaque(std::span<const std::uint8_t> bitstream) {
  std::vector<std::uint8_t> out(1 + bitstream.size());
  out[0] = static_cast<std::uint8_t>(PayloadKind::Opaque);
  std::copy(bitstream.begin(), bitstream.end(), out.begin() + 1);
  return out;
}

PayloadKind payload_kind(std::span<const std::uint8_t> payload) {
  if (payload.empty()) throw ProtocolError("empty frame payload");
  if (payload[0] > static_cast<std::uint8_t>(PayloadKind::Opaque)) throw ProtocolError("unknown payload kind");
  return static_cast<PayloadKind>(payload[0]);
}

FrameYUV420 deserialize_frame(std::span<const std::uint8_t> payload, std::uint32_t frame_id,
                              std::uint64_t capture_timestamp_us) {
  if (payload_kind(payload) != PayloadKind::RawI420)
    throw ProtocolError("opaque payloads must be decoded externally");
  if (payload.size() < kFrameHeaderSize) throw ProtocolError("truncated frame header");
  const int w = le::load<std::uint16_t>(payload.data() + 1);
  const int h = le::load<std::uint16_t>(payload.data() + 3);
  if (w == 0 || h == 0 || w % 2 || h % 2) throw ProtocolError("invalid frame dimensions");
  FrameYUV420 frame(w, h);
  const std::size_t need = frame.y.size() + frame.u.size() + frame.v.size();
  if (payload.size() != kFrameHeaderSize + need) throw ProtocolError("frame payload size does not match dimensions");
  auto it = payload.begin() + kFrameHeaderSize;
  std::copy_n(it, frame.y.size(), frame.y.begin());
  it += static_cast<std::ptrdiff_t>(frame.y.size());
  std::copy_n(it, frame.u.size(), frame.u.begin());
  it += static_cast<std::ptrdiff_t>(frame.u.size());
  std::copy_n(it, frame.v.size(), frame.v.begin());
  frame.frame_id = frame_id;
  frame.capture_timestamp_us = capture_timestamp_us;
  return frame;
}

std::vector<FramePacket> chunk_payload(std::uint32_t frame_id, std::uint64_t capture_timestamp_us,
                                       std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DomainError("chunk_payload: nothing to send");
  const std::size_t count = (bytes.size() + kMaxPayload - 1) / kMaxPayload;
  if (count > 0xFFFF) throw DomainError("chunk_payload: frame needs more than 65535 chunks");
  std::vector<FramePacket> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    FramePacket& p = out[i];
    p.frame_id = frame_id;
    p.capture_timestamp_us = capture_timestamp_us;
    p.chunk_index = static_cast<std::uint16_t>(i);
    p.chunk_count = static_cast<std::uint16_t>(count);
    const std::size_t begin = i * kMaxPayload;
    const std::size_t end = std::min(bytes.size(), begin + kMaxPayload);
    p.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(begin), bytes.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<FramePacket> chunk_frame(const FrameYUV420& frame) {
  const auto bytes = serialize_frame(frame);
  return chunk_payload(frame.frame_id, frame.capture_timestamp_us, bytes);
}

std::optional<CompletedFrame> Reassembler::push(std::span<const std::uint8_t> datagram) {
  FramePacket packet;
  try {
    packet = FramePacket::parse(datagram);
  } catch (const ProtocolError&) {
    ++stats_.packets;
    ++stats_.malformed;
    return std::nullopt;
  }
  return push(packet);
}

std::optional<CompletedFrame> Reassembler::push(const FramePacket& packet) {
  ++stats_.packets;
  if (packet.chunk_count == 0 || packet.chunk_index >= packet.chunk_count || packet.payload.size() > kMaxPayload) {
    ++stats_.malformed;
    return std::nullopt;
  }
  if (last_emitted_ && packet.frame_id <= *last_emitted_) {
    ++stats_.stale_packets;
    return std::nullopt;
  }

  auto it = std::find_if(partial_.begin(), partial_.end(),
                         [&](const Partial& p) { return p.frame_id == packet.frame_id; });
  if (it == partial_.end()) {
    if (partial_.size() >= kMaxBufferedFrames) {
      auto oldest = std::min_element(partial_.begin(), partial_.end(),
                                     [](const Partial& a, const Partial& b) { return a.frame_id < b.frame_id; });
      if (packet.frame_id < oldest->frame_id) {
        ++stats_.stale_packets;
        return std::nullopt;
      }
      partial_.erase(oldest);
      ++stats_.frames_discarded;
    }
    Partial fresh;
    fresh.frame_id = packet.frame_id;
    fresh.capture_timestamp_us = packet.capture_timestamp_us;
    fresh.chunks.resize(packet.chunk_count);
    fresh.received.assign(packet.chunk_count, false);
    fresh.missing = packet.chunk_count;
    partial_.push_back(std::move(fresh));
    it = partial_.end() - 1;
  } else if (it->chunks.size() != packet.chunk_count) {
    ++stats_.malformed;
    return std::nullopt;
  }

  Partial& frame = *it;
  if (frame.received[packet.chunk_index]) {
    ++stats_.duplicates;
    return std::nullopt;
  }
  frame.received[packet.chunk_index] = true;
  frame.chunks[packet.chunk_index] = packet.payload;
  if (--frame.missing > 0) return std::nullopt;

  CompletedFrame done;
  done.frame_id = frame.frame_id;
  done.capture_timestamp_us = frame.capture_timestamp_us;
  std::size_t total = 0;
  for (const auto& c : frame.chunks) total += c.size();
  done.payload.reserve(total);
  for (const auto& c : frame.chunks) done.payload.insert(done.payload.end(), c.begin(), c.end());

  last_emitted_ = done.frame_id;
  const auto before = partial_.size();
  std::erase_if(partial_, [&](const Partial& p) { return p.frame_id <= done.frame_id; });
  stats_.frames_discarded += before - partial_.size() - 1;
  ++stats_.frames_emitted;
  return done;
}

void Reassembler::reset() {
  partial_.clear();
  last_emitted_.reset();
}

PoseMessage encode_pose_message(const Pose6DoF& pose) {
  PoseMessage out{};
  for (int i = 0; i < 3; ++i) {
    le::store<float>(out.data() + 4 * i, static_cast<float>(pose.rotation(i)));
    le::store<float>(out.data() + 12 + 4 * i, static_cast<float>(pose.translation(i)));
  }
  return out;
}

Pose6DoF decode_pose_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kPoseMessageSize)
    throw ProtocolError("pose message must be 24 bytes, got " + std::to_string(bytes.size()));
  Pose6DoF pose;
  for (int i = 0; i < 3; ++i) {
    pose.rotation(i) = le::load<float>(bytes.data() + 4 * i);
    pose.translation(i) = le::load<float>(bytes.data() + 12 + 4 * i);
  }
  return pose;
}

std::array<std::uint8_t, kPoseReturnSize> encode_pose_return(const PoseReturn& msg) {
  std::array<std::uint8_t, kPoseReturnSize> out{};
  le::store<std::uint32_t>(out.data(), msg.frame_id);
  le::store<std::uint64_t>(out.data() + 4, msg.server_send_us);
  const PoseMessage core = encode_pose_message(msg.pose);
  std::copy(core.begin(), core.end(), out.begin() + 12);
  return out;
}

PoseReturn decode_pose_return(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kPoseReturnSize)
    throw ProtocolError("pose return must be 36 bytes, got " + std::to_string(bytes.size()));
  PoseReturn msg;
  msg.frame_id = le::load<std::uint32_t>(bytes.data());
  msg.server_send_us = le::load<std::uint64_t>(bytes.data() + 4);
  msg.pose = decode_pose_message(bytes.subspan(12));
  return msg;
}

}  // namespace egopose
