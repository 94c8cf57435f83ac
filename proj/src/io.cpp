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

#include "egopose/io.hpp"

#include <fstream>
#include <sstream>

namespace egopose {

using nlohmann::json;

namespace {

template <typename T>
T required(const json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw ConfigError(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": bad field '" + key + "': " + e.what());
  }
}

Eigen::Vector3d vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected a 3-element array");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ConfigError(std::string(what) + ": non-numeric entry");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = required<double>(j, "fx", "intrinsics");
  k.fy = required<double>(j, "fy", "intrinsics");
  k.px = required<double>(j, "px", "intrinsics");
  k.py = required<double>(j, "py", "intrinsics");
  k.s = j.value("s", 0.0);
  k.width = required<int>(j, "width", "intrinsics");
  k.height = required<int>(j, "height", "intrinsics");
  k.validate();
  return k;
}

json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"px", k.px}, {"py", k.py},
          {"s", k.s},   {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) { return intrinsics_from_json(read_json_file(path)); }

ModelPoints model_from_json(const json& j) {
  const std::string units = j.value("units", "m");
  double scale = 1.0;
  if (units == "mm") {
    scale = 1e-3;
  } else if (units != "m") {
    throw ConfigError("model: unsupported units '" + units + "'");
  }
  if (!j.contains("points") || !j["points"].is_array()) throw ConfigError("model: missing 'points' array");
  const json& pts = j["points"];
  ModelPoints m;
  m.points.resize(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) m.points.col(static_cast<Eigen::Index>(i)) = vec3(pts[i], "model point") * scale;
  if (j.contains("tip")) m.tip = vec3(j["tip"], "model tip") * scale;
  if (j.contains("axis")) m.axis = vec3(j["axis"], "model axis");
  m.validate();
  return m;
}

json model_to_json(const ModelPoints& m) {
  json pts = json::array();
  for (Eigen::Index i = 0; i < m.points.cols(); ++i) pts.push_back(vec_json(m.points.col(i)));
  json j = {{"points", pts}, {"units", "m"}};
  if (m.tip) j["tip"] = vec_json(*m.tip);
  if (m.axis) j["axis"] = vec_json(*m.axis);
  return j;
}

ModelPoints load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

AnchorConfig anchor_config_from_json(const json& j) {
  AnchorConfig c;
  if (j.contains("strides")) c.strides = required<std::vector<int>>(j, "strides", "anchor config");
  if (j.contains("scales")) c.scales = required<std::vector<double>>(j, "scales", "anchor config");
  if (j.contains("ratios")) c.ratios = required<std::vector<double>>(j, "ratios", "anchor config");
  if (j.contains("base_size_multiplier"))
    c.base_size_multiplier = required<double>(j, "base_size_multiplier", "anchor config");
  if (j.contains("levels") && required<std::size_t>(j, "levels", "anchor config") != c.strides.size())
    throw ConfigError("anchor config: 'levels' disagrees with the number of strides");
  c.validate();
  return c;
}

json anchor_config_to_json(const AnchorConfig& c) {
  return {{"levels", c.strides.size()},
          {"strides", c.strides},
          {"scales", c.scales},
          {"ratios", c.ratios},
          {"base_size_multiplier", c.base_size_multiplier}};
}

AnchorConfig load_anchor_config(const std::filesystem::path& path) {
  return anchor_config_from_json(read_json_file(path));
}

PreprocessConfig preprocess_config_from_json(const json& j) {
  PreprocessConfig c;
  const std::string range = j.value("yuv_range", "full");
  if (range == "studio") {
    c.range = YuvRange::Studio;
  } else if (range != "full") {
    throw ConfigError("preprocess: yuv_range must be 'full' or 'studio'");
  }
  if (j.contains("mean")) c.normalization.mean = required<std::array<double, 3>>(j, "mean", "preprocess");
  if (j.contains("std")) c.normalization.std = required<std::array<double, 3>>(j, "std", "preprocess");
  for (double s : c.normalization.std)
    if (!(s > 0.0)) throw ConfigError("preprocess: std entries must be positive");
  return c;
}

PoseRecord pose_record_from_json(const json& j) {
  PoseRecord r;
  r.frame_id = required<std::uint32_t>(j, "frame_id", "pose record");
  if (!j.contains("rotation") || !j.contains("translation"))
    throw ConfigError("pose record: missing rotation or translation");
  r.pose.rotation = vec3(j["rotation"], "pose record rotation");
  r.pose.translation = vec3(j["translation"], "pose record translation");
  if (j.contains("hand")) {
    const json& h = j["hand"];
    if (!h.is_array() || h.size() != 3 * kHandJoints) throw ConfigError("pose record: hand must have 63 values");
    HandVector v;
    for (int i = 0; i < 3 * kHandJoints; ++i) v(i) = h[static_cast<std::size_t>(i)].get<double>();
    r.hand = hand_from_vector(v);
  }
  return r;
}

json pose_record_to_json(const PoseRecord& r) {
  const HandVector h = hand_to_vector(r.hand);
  return {{"frame_id", r.frame_id},
          {"rotation", vec_json(r.pose.rotation)},
          {"translation", vec_json(r.pose.translation)},
          {"hand", vec_json(h.transpose())}};
}

std::vector<PoseRecord> read_pose_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<PoseRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(pose_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_pose_records(const std::filesystem::path& path, const std::vector<PoseRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& r : records) out << pose_record_to_json(r).dump() << '\n';
}

json frame_metrics_to_json(const FrameMetrics& m) {
  return {{"frame_id", m.frame_id},
          {"tool_add_m", m.tool_add_m},
          {"tip_error_m", m.tip_error_m},
          {"direction_error_deg", m.direction_error_deg},
          {"hand_add_m", m.hand_add_m}};
}

}  // namespace egopose
