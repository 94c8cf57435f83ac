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

// Frame preprocessing: planar I420 -> RGB -> bilinear resize -> normalized
// channel-first float tensor.

#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "egopose/geometry.hpp"

namespace egopose {

/// Planar I420 frame: full-resolution luma, 2x2-subsampled chroma.
struct FrameYUV420 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> u;
  std::vector<std::uint8_t> v;
  std::uint32_t frame_id = 0;
  std::uint64_t capture_timestamp_us = 0;

  FrameYUV420() = default;
  FrameYUV420(int w, int h);

  /// Throws StructuralError on odd dimensions or plane-size mismatch.
  void validate() const;
};

/// Interleaved 8-bit RGB.
struct FrameRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  FrameRGB() = default;
  FrameRGB(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  bool operator==(const FrameRGB&) const = default;
};

inline constexpr int kNetworkInputSize = 256;

/// (1, 3, 256, 256) float32, channel-first.
struct InputTensor {
  static constexpr std::array<int, 4> shape{1, 3, kNetworkInputSize, kNetworkInputSize};
  static constexpr std::size_t kPlane = static_cast<std::size_t>(kNetworkInputSize) * kNetworkInputSize;
  static constexpr std::size_t kElements = 3 * kPlane;

  std::vector<float> data = std::vector<float>(kElements, 0.0f);

  float at(int c, int y, int x) const {
    return data[static_cast<std::size_t>(c) * kPlane + static_cast<std::size_t>(y) * kNetworkInputSize + x];
  }
  bool operator==(const InputTensor&) const = default;
};

enum class YuvRange { Full, Studio };

struct Normalization {
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};
};

struct PreprocessConfig {
  YuvRange range = YuvRange::Full;
  Normalization normalization;
};

/// BT.601 conversion, nearest-neighbour chroma upsampling, clamped to [0, 255].
FrameRGB yuv420_to_rgb(const FrameYUV420& frame, YuvRange range = YuvRange::Full);

/// Anisotropic bilinear resize with half-pixel centers and edge clamping.
FrameRGB bilinear_resize(const FrameRGB& rgb, int out_width, int out_height);

/// (value / 255 - mean_c) / std_c, channel-first. Requires a 256x256 image.
InputTensor normalize(const FrameRGB& rgb, const Normalization& norm = {});

/// Inverse of normalize, rounded to the nearest byte.
FrameRGB denormalize(const InputTensor& tensor, const Normalization& norm = {});

/// yuv420_to_rgb -> bilinear_resize -> normalize, plus intrinsics rescaled to
/// the network input size.
std::pair<InputTensor, CameraIntrinsics> preprocess(const FrameYUV420& frame, const CameraIntrinsics& k,
                                                    const PreprocessConfig& config = {});

}  // namespace egopose
