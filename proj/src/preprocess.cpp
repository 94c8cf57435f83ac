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

#include "egopose/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace egopose {

namespace {

constexpr int kFracBits = 16;
constexpr int kHalf = 1 << (kFracBits - 1);

struct ColorTables {
  std::array<std::int32_t, 256> y{};
  std::array<std::int32_t, 256> r_from_v{};
  std::array<std::int32_t, 256> g_from_u{};
  std::array<std::int32_t, 256> g_from_v{};
  std::array<std::int32_t, 256> b_from_u{};
};

ColorTables make_tables(YuvRange range) {
  // Full range: R = Y + 1.402 V', G = Y - 0.344136 U' - 0.714136 V', B = Y + 1.772 U'.
  // Studio range rescales luma by 255/219 and chroma by 255/224.
  const bool studio = range == YuvRange::Studio;
  const double ys = studio ? 255.0 / 219.0 : 1.0;
  const double yo = studio ? 16.0 : 0.0;
  const double cs = studio ? 255.0 / 224.0 : 1.0;
  const double scale = 1 << kFracBits;
  ColorTables t;
  for (int i = 0; i < 256; ++i) {
    const double c = (i - 128) * cs;
    t.y[i] = static_cast<std::int32_t>(std::lround((i - yo) * ys * scale));
    t.r_from_v[i] = static_cast<std::int32_t>(std::lround(1.402 * c * scale));
    t.g_from_u[i] = static_cast<std::int32_t>(std::lround(-0.344136 * c * scale));
    t.g_from_v[i] = static_cast<std::int32_t>(std::lround(-0.714136 * c * scale));
    t.b_from_u[i] = static_cast<std::int32_t>(std::lround(1.772 * c * scale));
  }
  return t;
}

const ColorTables& tables(YuvRange range) {
  static const ColorTables full = make_tables(YuvRange::Full);
  static const ColorTables studio = make_tables(YuvRange::Studio);
  return range == YuvRange::Studio ? studio : full;
}

inline std::uint8_t to_byte(std::int32_t fixed) {
  return static_cast<std::uint8_t>(std::clamp((fixed + kHalf) >> kFracBits, 0, 255));
}

constexpr int kWeightBits = 11;
constexpr std::uint32_t kWeightOne = 1u << kWeightBits;

struct AxisTaps {
  std::vector<int> i0;
  std::vector<int> i1;
  std::vector<std::uint32_t> w1;  // weight of i1; i0 gets kWeightOne - w1
};

AxisTaps make_taps(int src, int dst) {
  AxisTaps taps;
  taps.i0.resize(static_cast<std::size_t>(dst));
  taps.i1.resize(static_cast<std::size_t>(dst));
  taps.w1.resize(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const auto idx = static_cast<std::size_t>(d);
    taps.i0[idx] = i0;
    taps.i1[idx] = std::min(i0 + 1, src - 1);
    taps.w1[idx] = static_cast<std::uint32_t>(std::lround((s - i0) * kWeightOne));
  }
  return taps;
}

}  // namespace

FrameYUV420::FrameYUV420(int w, int h)
    : width(w),
      height(h),
      y(static_cast<std::size_t>(w) * h, 0),
      u(static_cast<std::size_t>(w / 2) * (h / 2), 128),
      v(static_cast<std::size_t>(w / 2) * (h / 2), 128) {}

void FrameYUV420::validate() const {
  if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
    throw StructuralError("I420 frame: dimensions must be positive and even, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  const auto luma = static_cast<std::size_t>(width) * height;
  const auto chroma = luma / 4;
  if (y.size() != luma || u.size() != chroma || v.size() != chroma)
    throw StructuralError("I420 frame: plane sizes do not match " + std::to_string(width) + "x" +
                          std::to_string(height));
}

FrameRGB yuv420_to_rgb(const FrameYUV420& frame, YuvRange range) {
  frame.validate();
  const ColorTables& t = tables(range);
  FrameRGB out(frame.width, frame.height);
  const int cw = frame.width / 2;
  for (int row = 0; row < frame.height; ++row) {
    const std::uint8_t* yrow = frame.y.data() + static_cast<std::size_t>(row) * frame.width;
    const std::uint8_t* urow = frame.u.data() + static_cast<std::size_t>(row / 2) * cw;
    const std::uint8_t* vrow = frame.v.data() + static_cast<std::size_t>(row / 2) * cw;
    std::uint8_t* dst = out.pixel(0, row);
    for (int col = 0; col < frame.width; ++col) {
      const std::int32_t yy = t.y[yrow[col]];
      const std::uint8_t u = urow[col / 2];
      const std::uint8_t v = vrow[col / 2];
      dst[0] = to_byte(yy + t.r_from_v[v]);
      dst[1] = to_byte(yy + t.g_from_u[u] + t.g_from_v[v]);
      dst[2] = to_byte(yy + t.b_from_u[u]);
      dst += 3;
    }
  }
  return out;
}

FrameRGB bilinear_resize(const FrameRGB& rgb, int out_width, int out_height) {
  if (out_width <= 0 || out_height <= 0) throw DomainError("bilinear_resize: target size must be positive");
  if (rgb.width <= 0 || rgb.height <= 0 || rgb.data.empty()) throw DomainError("bilinear_resize: empty source");
  if (rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3)
    throw StructuralError("bilinear_resize: buffer length does not match dimensions");
  if (out_width == rgb.width && out_height == rgb.height) return rgb;

  const AxisTaps xs = make_taps(rgb.width, out_width);
  const AxisTaps ys = make_taps(rgb.height, out_height);
  FrameRGB out(out_width, out_height);
  constexpr std::uint32_t kRound = 1u << (2 * kWeightBits - 1);
  for (int oy = 0; oy < out_height; ++oy) {
    const auto yi = static_cast<std::size_t>(oy);
    const std::uint8_t* r0 = rgb.pixel(0, ys.i0[yi]);
    const std::uint8_t* r1 = rgb.pixel(0, ys.i1[yi]);
    const std::uint32_t wy1 = ys.w1[yi];
    const std::uint32_t wy0 = kWeightOne - wy1;
    std::uint8_t* dst = out.pixel(0, oy);
    for (int ox = 0; ox < out_width; ++ox) {
      const auto xi = static_cast<std::size_t>(ox);
      const int a = xs.i0[xi] * 3;
      const int b = xs.i1[xi] * 3;
      const std::uint32_t wx1 = xs.w1[xi];
      const std::uint32_t wx0 = kWeightOne - wx1;
      for (int c = 0; c < 3; ++c) {
        const std::uint32_t top = r0[a + c] * wx0 + r0[b + c] * wx1;
        const std::uint32_t bottom = r1[a + c] * wx0 + r1[b + c] * wx1;
        dst[c] = static_cast<std::uint8_t>((top * wy0 + bottom * wy1 + kRound) >> (2 * kWeightBits));
      }
      dst += 3;
    }
  }
  return out;
}

InputTensor normalize(const FrameRGB& rgb, const Normalization& norm) {
  if (rgb.width != kNetworkInputSize || rgb.height != kNetworkInputSize ||
      rgb.data.size() != InputTensor::kElements)
    throw StructuralError("normalize: expected a 256x256 RGB image, got " + std::to_string(rgb.width) + "x" +
                          std::to_string(rgb.height));
  std::array<std::array<float, 256>, 3> lut{};
  for (int c = 0; c < 3; ++c)
    for (int v = 0; v < 256; ++v)
      lut[c][v] = static_cast<float>((v / 255.0 - norm.mean[c]) / norm.std[c]);

  InputTensor t;
  float* r = t.data.data();
  float* g = r + InputTensor::kPlane;
  float* b = g + InputTensor::kPlane;
  const std::uint8_t* src = rgb.data.data();
  for (std::size_t i = 0; i < InputTensor::kPlane; ++i) {
    r[i] = lut[0][src[3 * i]];
    g[i] = lut[1][src[3 * i + 1]];
    b[i] = lut[2][src[3 * i + 2]];
  }
  return t;
}

FrameRGB denormalize(const InputTensor& tensor, const Normalization& norm) {
  if (tensor.data.size() != InputTensor::kElements) throw StructuralError("denormalize: tensor has wrong size");
  FrameRGB out(kNetworkInputSize, kNetworkInputSize);
  for (int c = 0; c < 3; ++c) {
    const float* plane = tensor.data.data() + static_cast<std::size_t>(c) * InputTensor::kPlane;
    for (std::size_t i = 0; i < InputTensor::kPlane; ++i) {
      const double v = (plane[i] * norm.std[c] + norm.mean[c]) * 255.0;
      out.data[3 * i + static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

std::pair<InputTensor, CameraIntrinsics> preprocess(const FrameYUV420& frame, const CameraIntrinsics& k,
                                                    const PreprocessConfig& config) {
  if (k.width != frame.width || k.height != frame.height)
    throw StructuralError("preprocess: intrinsics are for " + std::to_string(k.width) + "x" +
                          std::to_string(k.height) + " but the frame is " + std::to_string(frame.width) + "x" +
                          std::to_string(frame.height));
  const FrameRGB rgb = yuv420_to_rgb(frame, config.range);
  const FrameRGB small = bilinear_resize(rgb, kNetworkInputSize, kNetworkInputSize);
  return {normalize(small, config.normalization), rescale_intrinsics(k, kNetworkInputSize, kNetworkInputSize)};
}

}  // namespace egopose
