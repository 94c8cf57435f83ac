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

#include "egopose/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace egopose {

namespace {

// Largest exp() argument accepted for width/height regression.
const double kMaxLogScale = std::log(1000.0 / 16.0);

}  // namespace

void AnchorConfig::validate() const {
  if (strides.empty()) throw ConfigError("anchor config: no pyramid levels");
  if (strides.size() > 255) throw ConfigError("anchor config: too many pyramid levels");
  for (int s : strides)
    if (s <= 0) throw ConfigError("anchor config: strides must be positive");
  if (scales.empty() || ratios.empty()) throw ConfigError("anchor config: scales and ratios must be non-empty");
  for (double s : scales)
    if (!(s > 0.0)) throw ConfigError("anchor config: scales must be positive");
  for (double r : ratios)
    if (!(r > 0.0)) throw ConfigError("anchor config: ratios must be positive");
  if (!(base_size_multiplier > 0.0)) throw ConfigError("anchor config: base size multiplier must be positive");
}

Box Box::clipped(double width, double height) const {
  return {std::clamp(x0, 0.0, width), std::clamp(y0, 0.0, height), std::clamp(x1, 0.0, width),
          std::clamp(y1, 0.0, height)};
}

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::size_t expected_anchor_count(int width, int height, const AnchorConfig& config) {
  std::size_t cells = 0;
  for (int s : config.strides) cells += static_cast<std::size_t>(width / s) * static_cast<std::size_t>(height / s);
  return cells * config.anchors_per_cell();
}

AnchorGrid generate_anchors(int width, int height, const AnchorConfig& config) {
  config.validate();
  if (width <= 0 || height <= 0) throw ConfigError("generate_anchors: image size must be positive");
  const int max_stride = *std::max_element(config.strides.begin(), config.strides.end());
  if (width % max_stride != 0 || height % max_stride != 0)
    throw ConfigError("generate_anchors: image size " + std::to_string(width) + "x" + std::to_string(height) +
                      " is not divisible by the largest stride " + std::to_string(max_stride));

  AnchorGrid grid;
  grid.image_width = width;
  grid.image_height = height;
  const auto count = static_cast<Eigen::Index>(expected_anchor_count(width, height, config));
  grid.boxes.resize(count, 4);
  grid.level.resize(static_cast<std::size_t>(count));

  Eigen::Index i = 0;
  for (std::size_t lvl = 0; lvl < config.strides.size(); ++lvl) {
    const int stride = config.strides[lvl];
    const double base = config.base_size_multiplier * stride;
    for (int row = 0; row < height / stride; ++row) {
      for (int col = 0; col < width / stride; ++col) {
        const double cx = (col + 0.5) * stride;
        const double cy = (row + 0.5) * stride;
        for (double scale : config.scales) {
          for (double ratio : config.ratios) {
            const double root = std::sqrt(ratio);
            grid.boxes.row(i) << cx, cy, base * scale * root, base * scale / root;
            grid.level[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(lvl);
            ++i;
          }
        }
      }
    }
  }
  return grid;
}

void RawHeads::resize(Eigen::Index anchors) {
  class_logit.resize(anchors, 1);
  box_regress.resize(anchors, 4);
  rotation.resize(anchors, 3);
  center_offset.resize(anchors, 2);
  depth.resize(anchors, 1);
  hand.resize(anchors, 3 * kHandJoints);
}

void RawHeads::set_zero() {
  class_logit.setZero();
  box_regress.setZero();
  rotation.setZero();
  center_offset.setZero();
  depth.setZero();
  hand.setZero();
}

void RawHeads::check(Eigen::Index anchors) const {
  auto expect = [anchors](Eigen::Index rows, const char* name) {
    if (rows != anchors)
      throw StructuralError(std::string("raw heads: ") + name + " has " + std::to_string(rows) +
                            " rows, anchor grid has " + std::to_string(anchors));
  };
  expect(class_logit.rows(), "class_logit");
  expect(box_regress.rows(), "box_regress");
  expect(rotation.rows(), "rotation");
  expect(center_offset.rows(), "center_offset");
  expect(depth.rows(), "depth");
  expect(hand.rows(), "hand");
}

bool RawHeads::operator==(const RawHeads& o) const {
  return size() == o.size() && class_logit == o.class_logit && box_regress == o.box_regress &&
         rotation == o.rotation && center_offset == o.center_offset && depth == o.depth && hand == o.hand;
}

HandSkeleton21 hand_from_vector(const HandVector& v) {
  return Eigen::Map<const HandSkeleton21>(v.data());
}

HandVector hand_to_vector(const HandSkeleton21& h) {
  HandVector v;
  Eigen::Map<HandSkeleton21>(v.data()) = h;
  return v;
}

std::vector<Detection> decode_heads(const RawHeads& raw, const AnchorGrid& grid, const CameraIntrinsics& k,
                                    double min_score) {
  raw.check(grid.size());
  std::vector<Detection> out;
  const double w = grid.image_width;
  const double h = grid.image_height;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double score = sigmoid(raw.class_logit(i));
    if (score < min_score) continue;
    const double tz = raw.depth(i);
    if (!(tz > 0.0) || !std::isfinite(tz)) continue;

    Detection d;
    d.score = score;
    d.anchor = i;
    const Eigen::Vector2d c = grid.center(i) + raw.center_offset.row(i).transpose();
    d.pose.translation = recover_translation<double>(c, tz, k);
    d.pose.rotation = raw.rotation.row(i).transpose();
    d.hand = hand_from_vector(raw.hand.row(i));

    const auto a = grid.boxes.row(i);
    const auto r = raw.box_regress.row(i);
    const double cx = a(0) + r(0) * a(2);
    const double cy = a(1) + r(1) * a(3);
    const double bw = a(2) * std::exp(std::min(r(2), kMaxLogScale));
    const double bh = a(3) * std::exp(std::min(r(3), kMaxLogScale));
    d.box = Box{cx - 0.5 * bw, cy - 0.5 * bh, cx + 0.5 * bw, cy + 0.5 * bh}.clipped(w, h);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<std::size_t> nms(std::span<const Box> boxes, std::span<const double> scores, double iou_threshold) {
  if (boxes.size() != scores.size())
    throw StructuralError("nms: " + std::to_string(boxes.size()) + " boxes but " + std::to_string(scores.size()) +
                          " scores");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw DomainError("nms: IoU threshold must be in (0, 1]");

  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](std::size_t k) { return iou(boxes[idx], boxes[k]) > iou_threshold; });
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

std::optional<Detection> filter_detections(std::vector<Detection> candidates, double score_threshold,
                                           double iou_threshold, int image_width, int image_height) {
  std::erase_if(candidates, [&](const Detection& d) { return !(d.score >= score_threshold); });
  if (candidates.empty()) return std::nullopt;

  std::vector<Box> boxes;
  std::vector<double> scores;
  boxes.reserve(candidates.size());
  scores.reserve(candidates.size());
  for (auto& d : candidates) {
    d.box = d.box.clipped(image_width, image_height);
    boxes.push_back(d.box);
    scores.push_back(d.score);
  }
  const auto kept = nms(boxes, scores, iou_threshold);
  return std::move(candidates[kept.front()]);
}

Eigen::Index nearest_anchor(const AnchorGrid& grid, const Eigen::Vector2d& pixel) {
  Eigen::Index best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double d2 = (grid.center(i) - pixel).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

RawHeads encode_ground_truth(const Pose6DoF& pose, const HandSkeleton21& hand, const AnchorGrid& grid,
                             const CameraIntrinsics& k) {
  const Eigen::Vector3d& t = pose.translation;
  if (!t.allFinite() || !pose.rotation.allFinite() || !hand.allFinite())
    throw EncodeError("encode_ground_truth: non-finite pose or hand");
  if (!(t.z() > 0.0)) throw EncodeError("encode_ground_truth: object is at or behind the camera");
  if (grid.size() == 0) throw EncodeError("encode_ground_truth: empty anchor grid");

  // Exact inverse of recover_translation.
  const Eigen::Vector2d c(k.px + k.fx * t.x() / t.z(), k.py + k.fy * t.y() / t.z());
  if (!(c.x() >= 0.0 && c.x() < grid.image_width && c.y() >= 0.0 && c.y() < grid.image_height))
    throw EncodeError("encode_ground_truth: object center (" + std::to_string(c.x()) + ", " + std::to_string(c.y()) +
                      ") lies outside the image");

  RawHeads heads(grid.size());
  heads.set_zero();
  heads.class_logit.setConstant(kNegativeLogit);

  const Eigen::Index a = nearest_anchor(grid, c);
  heads.class_logit(a) = kPositiveLogit;
  heads.rotation.row(a) = pose.rotation.transpose();
  heads.center_offset.row(a) = (c - grid.center(a)).transpose();
  heads.depth(a) = t.z();
  heads.hand.row(a) = hand_to_vector(hand);
  return heads;
}

}  // namespace egopose
