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

// JSON configuration files and JSON-lines pose records.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "egopose/detection.hpp"
#include "egopose/geometry.hpp"
#include "egopose/losses.hpp"
#include "egopose/metrics.hpp"
#include "egopose/preprocess.hpp"

namespace egopose {

/// { "fx","fy","px","py","s","width","height" }
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);
nlohmann::json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics load_intrinsics(const std::filesystem::path& path);

/// { "points": [[x,y,z],...], "tip": [x,y,z], "axis": [x,y,z], "units": "m" }
/// "mm" units are converted to meters; tip and axis are optional.
ModelPoints model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelPoints& m);
ModelPoints load_model(const std::filesystem::path& path);

/// { "strides": [...], "scales": [...], "ratios": [...], "base_size_multiplier": 4, "levels": 5 }
AnchorConfig anchor_config_from_json(const nlohmann::json& j);
nlohmann::json anchor_config_to_json(const AnchorConfig& c);
AnchorConfig load_anchor_config(const std::filesystem::path& path);

/// { "yuv_range": "full"|"studio", "mean": [3], "std": [3] }
PreprocessConfig preprocess_config_from_json(const nlohmann::json& j);

/// One line of a prediction / ground-truth file.
struct PoseRecord {
  std::uint32_t frame_id = 0;
  Pose6DoF pose;
  HandSkeleton21 hand = HandSkeleton21::Zero();
};

/// {frame_id, rotation:[3], translation:[3], hand:[63]}; meters and radians.
PoseRecord pose_record_from_json(const nlohmann::json& j);
nlohmann::json pose_record_to_json(const PoseRecord& r);

/// Reads a JSON-lines file; blank lines are skipped. Errors name the line.
std::vector<PoseRecord> read_pose_records(const std::filesystem::path& path);
void write_pose_records(const std::filesystem::path& path, const std::vector<PoseRecord>& records);

nlohmann::json frame_metrics_to_json(const FrameMetrics& m);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace egopose
