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

// Anchor tiling and decoding of per-anchor network heads into a single tool
// pose and hand skeleton.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "egopose/geometry.hpp"
#include "egopose/losses.hpp"

namespace egopose {

struct AnchorConfig {
  std::vector<int> strides{8, 16, 32, 64, 128};
  std::vector<double> scales{1.0, 1.2599210498948732, 1.5874010519681994};  // 2^0, 2^(1/3), 2^(2/3)
  std::vector<double> ratios{0.5, 1.0, 2.0};
  double base_size_multiplier = 4.0;

  std::size_t anchors_per_cell() const { return scales.size() * ratios.size(); }
  void validate() const;
  bool operator==(const AnchorConfig&) const = default;
};

/// Axis-aligned box in pixel corner coordinates.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double area() const { return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0); }
  Box clipped(double width, double height) const;
  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

using AnchorMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

/// Immutable anchor tiling. Row i of `boxes` is (center_x, center_y, width, height).
struct AnchorGrid {
  AnchorMatrix boxes;
  std::vector<std::uint8_t> level;
  int image_width = 0;
  int image_height = 0;

  Eigen::Index size() const { return boxes.rows(); }
  Eigen::Vector2d center(Eigen::Index i) const { return {boxes(i, 0), boxes(i, 1)}; }
};

/// Tiles anchors over every pyramid level, ordered level, row, column,
/// scale, ratio. Both image sides must be divisible by the largest stride.
AnchorGrid generate_anchors(int width, int height, const AnchorConfig& config = {});

/// Sum over levels of (w / stride) * (h / stride) * scales * ratios.
std::size_t expected_anchor_count(int width, int height, const AnchorConfig& config);

template <int Cols>
using HeadMatrix = Eigen::Matrix<double, Eigen::Dynamic, Cols, Cols == 1 ? Eigen::ColMajor : Eigen::RowMajor>;

/// Per-anchor network outputs; every member has one row per anchor.
struct RawHeads {
  HeadMatrix<1> class_logit;
  HeadMatrix<4> box_regress;
  HeadMatrix<3> rotation;
  HeadMatrix<2> center_offset;
  HeadMatrix<1> depth;
  HeadMatrix<3 * kHandJoints> hand;

  RawHeads() = default;
  explicit RawHeads(Eigen::Index anchors) { resize(anchors); }

  void resize(Eigen::Index anchors);
  void set_zero();
  Eigen::Index size() const { return class_logit.rows(); }
  /// Throws StructuralError when a member's row count differs from `anchors`.
  void check(Eigen::Index anchors) const;
  bool operator==(const RawHeads& other) const;
};

struct Detection {
  double score = 0.0;
  Pose6DoF pose;
  HandSkeleton21 hand = HandSkeleton21::Zero();
  Box box;
  Eigen::Index anchor = -1;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Decodes every anchor whose score is at least `min_score`. Anchors with a
/// non-positive or non-finite depth cannot form a pose and are skipped.
/// `k` must describe the network-input image the grid was tiled over.
std::vector<Detection> decode_heads(const RawHeads& raw, const AnchorGrid& grid, const CameraIntrinsics& k,
                                    double min_score = 0.0);

/// Greedy NMS. Returns kept indices by descending score; equal scores keep the
/// lower index first. A box is suppressed when its IoU with a kept box exceeds
/// the threshold.
std::vector<std::size_t> nms(std::span<const Box> boxes, std::span<const double> scores, double iou_threshold);

struct FilterParams {
  double score_threshold = 0.5;
  double iou_threshold = 0.5;
};

/// Score threshold, clipping and NMS, then top-1 selection.
std::optional<Detection> filter_detections(std::vector<Detection> candidates, double score_threshold,
                                           double iou_threshold, int image_width, int image_height);

inline std::optional<Detection> filter_detections(std::vector<Detection> candidates, const FilterParams& params,
                                                  const AnchorGrid& grid) {
  return filter_detections(std::move(candidates), params.score_threshold, params.iou_threshold, grid.image_width,
                           grid.image_height);
}

inline constexpr double kPositiveLogit = 6.0;
inline constexpr double kNegativeLogit = -6.0;

/// Index of the anchor whose center is nearest to `pixel` (lowest index on ties).
Eigen::Index nearest_anchor(const AnchorGrid& grid, const Eigen::Vector2d& pixel);

/// Inverse of decode_heads for one object: the anchor nearest the object's
/// center gets a positive logit and exact regression targets, every other
/// anchor is zero with a negative logit.
RawHeads encode_ground_truth(const Pose6DoF& pose, const HandSkeleton21& hand, const AnchorGrid& grid,
                             const CameraIntrinsics& k);

using HandVector = Eigen::Matrix<double, 1, 3 * kHandJoints>;

/// 63-vector (x0 y0 z0 x1 ...) <-> 3x21 skeleton.
HandSkeleton21 hand_from_vector(const HandVector& v);
HandVector hand_to_vector(const HandSkeleton21& h);

}  // namespace egopose
