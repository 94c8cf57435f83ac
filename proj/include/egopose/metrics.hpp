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

// Evaluation metrics and their mean/std aggregation. Inputs are SI
// (meters, radians); aggregated reports are millimeters and degrees.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egopose/geometry.hpp"
#include "egopose/losses.hpp"

namespace egopose {

/// Mean distance between model points under the two poses (meters).
double add_tool(const Pose6DoF& pose_gt, const Pose6DoF& pose_pred, const ModelPoints& model);

/// Mean per-joint end-point error (meters).
double add_hand(const HandSkeleton21& h_gt, const HandSkeleton21& h_pred);

/// Distance between the drill tip under both poses (meters). Needs model.tip.
double drill_tip_error(const Pose6DoF& pose_gt, const Pose6DoF& pose_pred, const ModelPoints& model);

/// Angle between the drill axis under both rotations (degrees, [0, 180]). Needs model.axis.
double drill_direction_error(const Pose6DoF& pose_gt, const Pose6DoF& pose_pred, const ModelPoints& model);

/// Per-frame metric values in SI units.
struct FrameMetrics {
  std::uint32_t frame_id = 0;
  double tool_add_m = 0.0;
  double tip_error_m = 0.0;
  double direction_error_deg = 0.0;
  double hand_add_m = 0.0;
};

FrameMetrics compute_frame_metrics(std::uint32_t frame_id, const Pose6DoF& pose_gt, const Pose6DoF& pose_pred,
                                   const HandSkeleton21& hand_gt, const HandSkeleton21& hand_pred,
                                   const ModelPoints& model);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct MetricReport {
  MeanStd tool_add_mm;
  MeanStd tip_error_mm;
  MeanStd direction_error_deg;
  MeanStd hand_add_mm;
  std::size_t n_frames = 0;
};

/// Mean and population std of a sample (single pass, Welford).
MeanStd mean_std(std::span<const double> values);

MetricReport aggregate_metrics(std::span<const FrameMetrics> per_frame);

/// Table-style text: one row per metric, "mean ± std".
std::string format_metric_table(const MetricReport& report, const std::string& title = "EgoPose");
std::string format_metric_csv(const MetricReport& report);

}  // namespace egopose
