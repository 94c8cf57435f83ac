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

#include "egopose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace egopose {

namespace {

// Mean of per-point distances, summed as offsets from the first value so a
// constant sequence averages to exactly that constant.
double shifted_mean(const Eigen::VectorXd& values) {
  const double ref = values(0);
  double acc = 0.0;
  for (Eigen::Index i = 1; i < values.size(); ++i) acc += values(i) - ref;
  return ref + acc / static_cast<double>(values.size());
}

}  // namespace

Points3<double> subsample_points(const Points3<double>& points, Eigen::Index max_points, std::uint64_t seed) {
  const Eigen::Index n = points.cols();
  if (max_points <= 0) throw DomainError("subsample_points: max_points must be positive");
  if (n <= max_points) return points;

  auto next = [state = seed]() mutable {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < max_points; ++i) {
    const auto span = static_cast<std::uint64_t>(n - i);
    const auto j = i + static_cast<Eigen::Index>(next() % span);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::sort(idx.begin(), idx.begin() + max_points);
  Points3<double> out(3, max_points);
  for (Eigen::Index i = 0; i < max_points; ++i) out.col(i) = points.col(idx[static_cast<std::size_t>(i)]);
  return out;
}

double add_tool(const Pose6DoF& pose_gt, const Pose6DoF& pose_pred, const ModelPoints& model) {
  if (model.size() == 0) throw DomainError("add_tool: model point set is empty");
  const Eigen::Matrix3d delta_r = axis_angle_to_matrix(pose_gt.rotation) - axis_angle_to_matrix(pose_pred.rotation);
  const Eigen::Vector3d delta_t = pose_gt.translation - pose_pred.translation;
  Points3<double> diff = delta_r * model.points;
  diff.colwise() += delta_t;
  return shifted_mean(diff.colwise().norm().transpose());
}

double add_hand(const HandSkeleton21& h_gt, const HandSkeleton21& h_pred) {
  return shifted_mean((h_gt - h_pred).colwise().norm().transpose());
}

double drill_tip_error(const Pose6DoF& pose_gt, const Pose6DoF& pose_pred, const ModelPoints& model) {
  if (!model.tip) throw ConfigError("drill_tip_error: model metadata has no tip point");
  const Eigen::Matrix3d delta_r = axis_angle_to_matrix(pose_gt.rotation) - axis_angle_to_matrix(pose_pred.rotation);
  return (delta_r * *model.tip + (pose_gt.translation - pose_pred.translation)).norm();
}

double drill_direction_error(const Pose6DoF& pose_gt, const Pose6DoF& pose_pred, const ModelPoints& model) {
  if (!model.axis) throw ConfigError("drill_direction_error: model metadata has no drill axis");
  const Eigen::Vector3d a = axis_angle_to_matrix(pose_gt.rotation) * *model.axis;
  const Eigen::Vector3d b = axis_angle_to_matrix(pose_pred.rotation) * *model.axis;
  // atan2 form of arccos(<a, b>): same angle, well conditioned near 0 and 180.
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / M_PI;
}

FrameMetrics compute_frame_metrics(std::uint32_t frame_id, const Pose6DoF& pose_gt, const Pose6DoF& pose_pred,
                                   const HandSkeleton21& hand_gt, const HandSkeleton21& hand_pred,
                                   const ModelPoints& model) {
  FrameMetrics m;
  m.frame_id = frame_id;
  m.tool_add_m = add_tool(pose_gt, pose_pred, model);
  m.tip_error_m = drill_tip_error(pose_gt, pose_pred, model);
  m.direction_error_deg = drill_direction_error(pose_gt, pose_pred, model);
  m.hand_add_m = add_hand(hand_gt, hand_pred);
  return m;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean_std: empty sample");
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  return {mean, std::sqrt(std::max(0.0, m2 / static_cast<double>(n)))};
}

MetricReport aggregate_metrics(std::span<const FrameMetrics> per_frame) {
  if (per_frame.empty()) throw DomainError("aggregate_metrics: no frames");
  std::vector<double> tool, tip, dir, hand;
  tool.reserve(per_frame.size());
  tip.reserve(per_frame.size());
  dir.reserve(per_frame.size());
  hand.reserve(per_frame.size());
  for (const auto& f : per_frame) {
    tool.push_back(f.tool_add_m * 1000.0);
    tip.push_back(f.tip_error_m * 1000.0);
    dir.push_back(f.direction_error_deg);
    hand.push_back(f.hand_add_m * 1000.0);
  }
  MetricReport r;
  r.tool_add_mm = mean_std(tool);
  r.tip_error_mm = mean_std(tip);
  r.direction_error_deg = mean_std(dir);
  r.hand_add_mm = mean_std(hand);
  r.n_frames = per_frame.size();
  return r;
}

std::string format_metric_table(const MetricReport& report, const std::string& title) {
  char line[160];
  std::ostringstream out;
  std::snprintf(line, sizeof line, "%-34s %s\n", "", title.c_str());
  out << line;
  auto row = [&](const char* label, const MeanStd& v) {
    std::snprintf(line, sizeof line, "%-34s %.2f ± %.2f\n", label, v.mean, v.std);
    out << line;
  };
  row("Tool ADD (mm)", report.tool_add_mm);
  row("Drill Tip Error (mm)", report.tip_error_mm);
  row("Drill Bit Direction Error (deg)", report.direction_error_deg);
  row("Hand ADD (mm)", report.hand_add_mm);
  out << "\nframes: " << report.n_frames << "  (mean ± population standard deviation)\n";
  return out.str();
}

std::string format_metric_csv(const MetricReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "metric,mean,std,n_frames\n";
  out << "tool_add_mm," << report.tool_add_mm.mean << ',' << report.tool_add_mm.std << ',' << report.n_frames << '\n';
  out << "tip_error_mm," << report.tip_error_mm.mean << ',' << report.tip_error_mm.std << ',' << report.n_frames
      << '\n';
  out << "direction_error_deg," << report.direction_error_deg.mean << ',' << report.direction_error_deg.std << ','
      << report.n_frames << '\n';
  out << "hand_add_mm," << report.hand_add_mm.mean << ',' << report.hand_add_mm.std << ',' << report.n_frames << '\n';
  return out.str();
}

}  // namespace egopose
