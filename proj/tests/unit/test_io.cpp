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

#include <cstdio>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "egopose/frame_io.hpp"
#include "egopose/io.hpp"
#include "support.hpp"

using namespace egopose;
using egopose::testing::Rng;
using egopose::testing::TempDir;
using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

TEST_CASE("intrinsics json") {
  const json j = {{"fx", 686.0}, {"fy", 690.5}, {"px", 448.0}, {"py", 252.0}, {"width", 896}, {"height", 504}};
  const CameraIntrinsics k = intrinsics_from_json(j);
  CHECK(k.fx == 686.0);
  CHECK(k.fy == 690.5);
  CHECK(k.s == 0.0);
  CHECK(k.width == 896);
  CHECK(intrinsics_from_json(intrinsics_to_json(k)) == k);

  json missing = j;
  missing.erase("fy");
  CHECK_THROWS_AS(intrinsics_from_json(missing), ConfigError);
  json negative = j;
  negative["fx"] = -1.0;
  CHECK_THROWS_AS(intrinsics_from_json(negative), ConfigError);
  json wrong_type = j;
  wrong_type["width"] = "wide";
  CHECK_THROWS_AS(intrinsics_from_json(wrong_type), ConfigError);
}

TEST_CASE("model json") {
  const json mm = {{"units", "mm"},
                   {"points", {{0, 0, 0}, {10, 20, 30}}},
                   {"tip", {0, 0, 180}},
                   {"axis", {0, 0, 1}}};
  const ModelPoints m = model_from_json(mm);
  CHECK(m.size() == 2);
  CHECK(m.points(2, 1) == doctest::Approx(0.03));
  CHECK(m.tip->z() == doctest::Approx(0.18));
  CHECK(*m.axis == Eigen::Vector3d(0, 0, 1));

  const ModelPoints back = model_from_json(model_to_json(m));
  CHECK(back.points == m.points);
  CHECK(*back.tip == *m.tip);

  const json bare = {{"points", {{1, 2, 3}}}};
  CHECK_FALSE(model_from_json(bare).tip);
  CHECK_THROWS_AS(model_from_json(json{{"points", json::array()}}), ConfigError);
  CHECK_THROWS_AS(model_from_json(json{{"points", {{1, 2}}}}), ConfigError);
  CHECK_THROWS_AS(model_from_json(json{{"units", "in"}, {"points", {{1, 2, 3}}}}), ConfigError);
  CHECK_THROWS_AS(model_from_json(json{{"points", {{1, 2, 3}}}, {"axis", {0, 0, 2}}}), ConfigError);
  CHECK_THROWS_AS(model_from_json(json::object()), ConfigError);
}

TEST_CASE("anchor and preprocess config json") {
  const AnchorConfig def;
  CHECK(anchor_config_from_json(anchor_config_to_json(def)) == def);
  CHECK(anchor_config_from_json(json::object()) == def);
  const AnchorConfig c = anchor_config_from_json(json{{"strides", {16, 32}}, {"scales", {1.0}}, {"ratios", {1.0}}});
  CHECK(c.strides == std::vector<int>{16, 32});
  CHECK(c.base_size_multiplier == 4.0);
  CHECK_THROWS_AS(anchor_config_from_json(json{{"strides", {8, 16}}, {"levels", 5}}), ConfigError);
  CHECK_THROWS_AS(anchor_config_from_json(json{{"strides", {0}}}), ConfigError);

  const PreprocessConfig p = preprocess_config_from_json(json{{"yuv_range", "studio"}, {"mean", {0, 0, 0}}});
  CHECK(p.range == YuvRange::Studio);
  CHECK(p.normalization.mean[1] == 0.0);
  CHECK(p.normalization.std[0] == 0.229);
  CHECK_THROWS_AS(preprocess_config_from_json(json{{"yuv_range", "hdr"}}), ConfigError);
  CHECK_THROWS_AS(preprocess_config_from_json(json{{"std", {1, 0, 1}}}), ConfigError);
}

TEST_CASE("shipped config files") {
  const std::filesystem::path data = EGOPOSE_REPO_DATA;
  const CameraIntrinsics k = load_intrinsics(data / "hmd_intrinsics.json");
  CHECK(k.width == 896);
  CHECK(k.height == 504);
  CHECK(load_anchor_config(data / "anchors.json") == AnchorConfig{});
  const ModelPoints m = load_model(data / "drill_model.json");
  CHECK(m.tip.has_value());
  CHECK(m.axis.has_value());
  const PreprocessConfig p = preprocess_config_from_json(read_json_file(data / "preprocess.json"));
  CHECK(p.range == YuvRange::Full);
}

TEST_CASE("pose records") {
  Rng rng(81);
  TempDir dir("io");
  std::vector<PoseRecord> recs;
  for (std::uint32_t i = 0; i < 200; ++i) {
    PoseRecord r;
    r.frame_id = i * 3;
    r.pose = Pose6DoF{rng.rotation(), rng.vector(-1, 1)};
    r.hand = rng.hand();
    recs.push_back(r);
  }
  write_pose_records(dir / "p.jsonl", recs);
  const auto back = read_pose_records(dir / "p.jsonl");
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].frame_id == recs[i].frame_id);
    CHECK(back[i].pose.rotation == recs[i].pose.rotation);
    CHECK(back[i].pose.translation == recs[i].pose.translation);
    CHECK(back[i].hand == recs[i].hand);
  }

  // Records written elsewhere with 17 significant digits parse with no drift.
  for (int n = 0; n < 1000; ++n) {
    const Eigen::Vector3d r = rng.rotation(), t = rng.vector(-3, 3);
    std::string line = "{\"frame_id\": " + std::to_string(n) + ", \"rotation\": [" + g17(r.x()) + ", " + g17(r.y()) +
                       ", " + g17(r.z()) + "], \"translation\": [" + g17(t.x()) + ", " + g17(t.y()) + ", " +
                       g17(t.z()) + "]}";
    const PoseRecord p = pose_record_from_json(json::parse(line));
    REQUIRE(p.pose.rotation == r);
    REQUIRE(p.pose.translation == t);
    CHECK(p.hand.isZero());
  }

  write_text(dir / "blank.jsonl",
             "\n{\"frame_id\": 1, \"rotation\": [0,0,0], \"translation\": [0,0,1]}\n\n");
  CHECK(read_pose_records(dir / "blank.jsonl").size() == 1);

  write_text(dir / "bad.jsonl", "{\"frame_id\": 1, \"rotation\": [0,0,0], \"translation\": [0,0,1]}\n{oops\n");
  try {
    read_pose_records(dir / "bad.jsonl");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(read_pose_records(dir / "absent.jsonl"), ConfigError);
  CHECK_THROWS_AS(pose_record_from_json(json{{"frame_id", 1}, {"rotation", {0, 0, 0}}}), ConfigError);
  CHECK_THROWS_AS(
      pose_record_from_json(json{{"frame_id", 1}, {"rotation", {0, 0, 0}}, {"translation", {0, 0, 1}}, {"hand", {1}}}),
      ConfigError);
}

TEST_CASE("i420 fixtures") {
  Rng rng(82);
  TempDir dir("frames");
  FrameYUV420 f(64, 36);
  for (auto& b : f.y) b = static_cast<std::uint8_t>(rng.integer(0, 255));
  for (auto& b : f.u) b = static_cast<std::uint8_t>(rng.integer(0, 255));
  f.frame_id = 12;
  f.capture_timestamp_us = 987654321;
  const auto sidecar = save_i420_fixture(f, dir.path(), "frame_000012");
  CHECK(std::filesystem::exists(dir / "frame_000012.i420"));
  CHECK(std::filesystem::file_size(dir / "frame_000012.i420") == 64u * 36 * 3 / 2);
  const json meta = read_json_file(sidecar);
  CHECK(meta.at("width") == 64);
  CHECK(meta.at("timestamp") == 987654321);

  const FrameYUV420 g = load_i420_fixture(sidecar);
  CHECK(g.y == f.y);
  CHECK(g.u == f.u);
  CHECK(g.v == f.v);
  CHECK(g.frame_id == 12);
  CHECK(g.capture_timestamp_us == 987654321);

  save_i420_fixture(f, dir.path(), "frame_000003");
  write_text(dir / "notes.json", "{}");
  const auto listed = list_fixture_sidecars(dir.path());
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].filename() == "frame_000003.json");

  // Sidecar written by another tool, naming its blob explicitly.
  std::filesystem::copy_file(dir / "frame_000012.i420", dir / "blob.bin");
  write_text(dir / "other.json", R"({"width": 64, "height": 36, "frame_id": 4, "timestamp": 5, "file": "blob.bin"})");
  CHECK(load_i420_fixture(dir / "other.json").y == f.y);

  write_text(dir / "odd.json", R"({"width": 63, "height": 36, "frame_id": 4, "timestamp": 5})");
  CHECK_THROWS_AS(load_i420_fixture(dir / "odd.json"), ConfigError);
  write_text(dir / "short.json", R"({"width": 64, "height": 38, "frame_id": 4, "timestamp": 5, "file": "blob.bin"})");
  CHECK_THROWS_AS(load_i420_fixture(dir / "short.json"), StructuralError);
  CHECK_THROWS_AS(list_fixture_sidecars(dir / "nowhere"), ConfigError);
}

TEST_CASE("ppm") {
  TempDir dir("ppm");
  FrameRGB img(3, 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 10);
  write_ppm(img, dir / "x.ppm");
  const std::string bytes = read_bytes(dir / "x.ppm");
  const std::string header = "P6\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 18);
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 5]) == 50);
}

TEST_CASE("frame metrics json") {
  const json j = frame_metrics_to_json(FrameMetrics{7, 0.001, 0.002, 3.5, 0.004});
  CHECK(j.at("frame_id") == 7);
  CHECK(j.dump().find("3.5") != std::string::npos);
}
