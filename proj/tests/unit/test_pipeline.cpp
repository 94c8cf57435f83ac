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

#include <algorithm>
#include <fstream>
#include <iterator>
#include <thread>

#include "doctest.h"
#include "egopose/bench.hpp"
#include "egopose/client.hpp"
#include "egopose/evaluate.hpp"
#include "egopose/frame_io.hpp"
#include "egopose/server.hpp"
#include "support.hpp"

using namespace egopose;
using namespace std::chrono_literals;
using egopose::testing::quaternion_oracle;
using egopose::testing::Rng;
using egopose::testing::TempDir;

namespace {

// Same camera at 128x72: a frame fits in 12 datagrams, so lossy links still
// complete a useful share of frames.
CameraIntrinsics small_k() { return rescale_intrinsics(default_hmd_intrinsics(), 128, 72); }

struct Loopback {
  std::uint64_t seed;
  CameraIntrinsics k;
  std::shared_ptr<Server> server;

  Loopback(std::uint64_t s, CameraIntrinsics intr, ServerConfig sc = {}) : seed(s), k(intr) {
    const AnchorGrid grid = generate_anchors(kNetworkInputSize, kNetworkInputSize);
    auto backend = std::make_shared<SyntheticBackend>(grid, [s, intr](std::uint32_t id) {
      return scripted_pose(s, id, intr);
    });
    sc.port = 0;
    sc.loopback_only = true;
    sc.intrinsics = k;
    server = std::make_shared<Server>(sc, backend);
    server->start();
  }
  ~Loopback() { server->stop(); }

  ClientConfig client(double fps, std::uint32_t frames) const {
    ClientConfig cc;
    cc.server = Endpoint::loopback(server->port());
    cc.fps = fps;
    cc.max_frames = frames;
    cc.drain_timeout = 500ms;
    return cc;
  }
};

double tool_add_vs_script(std::uint64_t seed, const PoseRecord& p, const CameraIntrinsics& k) {
  return add_tool(scripted_pose(seed, p.frame_id, k).pose, p.pose, default_drill_model());
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("scripted poses") {
  const CameraIntrinsics k = default_hmd_intrinsics();
  for (std::uint32_t id = 0; id < 2000; ++id) {
    const PoseRecord r = scripted_pose(5, id, k);
    CHECK(r.frame_id == id);
    const PoseRecord again = scripted_pose(5, id, k);
    CHECK(again.pose.rotation == r.pose.rotation);
    CHECK(again.hand == r.hand);
    const double tz = r.pose.translation.z();
    CHECK(tz >= 0.3);
    CHECK(tz <= 1.5);
    CHECK(r.pose.rotation.norm() <= M_PI);
    const Eigen::Vector2d c = project_point(k, r.pose.translation);
    CHECK(c.x() >= 0.15 * k.width - 1e-9);
    CHECK(c.x() <= 0.85 * k.width + 1e-9);
    CHECK(c.y() >= 0.15 * k.height - 1e-9);
    CHECK(c.y() <= 0.85 * k.height + 1e-9);
    CHECK((r.hand.array().col(0) > -10).all());
  }
  CHECK(scripted_pose(5, 1, k).pose.translation != scripted_pose(6, 1, k).pose.translation);
}

TEST_CASE("shipped data files match the built-in defaults") {
  const std::filesystem::path data = EGOPOSE_REPO_DATA;
  CHECK(load_intrinsics(data / "hmd_intrinsics.json") == default_hmd_intrinsics());
  const ModelPoints file = load_model(data / "drill_model.json");
  const ModelPoints def = default_drill_model();
  CHECK(file.points == def.points);
  CHECK(*file.tip == *def.tip);
  CHECK(*file.axis == *def.axis);
}

TEST_CASE("frame sources") {
  const CameraIntrinsics k = small_k();
  SyntheticSource src(3, k, default_drill_model(), 4);
  std::vector<SourceFrame> frames;
  while (auto f = src.next()) frames.push_back(std::move(*f));
  REQUIRE(frames.size() == 4);
  CHECK(frames[2].frame.frame_id == 2);
  CHECK(frames[2].frame.width == 128);
  REQUIRE(frames[2].ground_truth);
  CHECK(frames[2].ground_truth->pose.translation == scripted_pose(3, 2, k).pose.translation);
  // Projected model points are drawn bright on gray.
  CHECK(*std::max_element(frames[0].frame.y.begin(), frames[0].frame.y.end()) == 235);

  TempDir dir("source");
  std::vector<PoseRecord> gt;
  for (const auto& f : frames) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "frame_%06u", f.frame.frame_id);
    save_i420_fixture(f.frame, dir.path(), stem);
    gt.push_back(*f.ground_truth);
  }
  write_pose_records(dir / "ground_truth.jsonl", gt);
  const auto opened = open_frame_source(dir.path().string(), k, default_drill_model(), 0);
  std::uint32_t n = 0;
  while (auto f = opened->next()) {
    CHECK(f->frame.y == frames[n].frame.y);
    REQUIRE(f->ground_truth);
    CHECK(f->ground_truth->pose.rotation == gt[n].pose.rotation);
    ++n;
  }
  CHECK(n == 4);

  CHECK_NOTHROW(open_frame_source("synthetic:9", k, default_drill_model(), 1));
  CHECK_THROWS_AS(open_frame_source("synthetic:abc", k, default_drill_model(), 1), ConfigError);
  CHECK_THROWS_AS(open_frame_source((dir / "missing").string(), k, default_drill_model(), 1), ConfigError);
}

TEST_CASE("latest slot") {
  LatestSlot<int> slot;
  CHECK_FALSE(slot.take());
  slot.put(1);
  slot.put(2);
  CHECK(slot.take() == 2);
  CHECK_FALSE(slot.take());
  CHECK(slot.overwritten() == 1);
}

TEST_CASE("end to end: 100 scripted frames") {
  BenchConfig bc;
  bc.frames = 100;
  bc.seed = 11;
  const BenchResult r = run_bench(bc);
  CHECK(r.client.frames_sent == 100);
  CHECK(r.client.poses_received == 100);
  CHECK(r.completed == 100);
  CHECK(r.server.frame_errors == 0);
  CHECK(r.max_tool_add_m * 1000.0 < 1e-3);
  CHECK(r.max_hand_add_m < 1e-6);
  REQUIRE(r.report);
  CHECK(r.report->n_traces == 100);
  for (const auto& s : r.report->stages) {
    CHECK(s.n == 100);
    CHECK(s.ms.mean >= 0.0);
  }
  // Each received pose is the one scripted for its own frame id.
  REQUIRE(r.client.received.size() == 100);
  for (std::size_t i = 0; i < r.client.received.size(); ++i) {
    CHECK(r.client.received[i].frame_id == i);
    CHECK(tool_add_vs_script(bc.seed, r.client.received[i], bc.intrinsics) < 1e-6);
  }
  for (const auto& t : r.traces) {
    REQUIRE(t.complete());
    std::int64_t sum = 0;
    for (std::size_t s = 0; s + 1 < kStageCount; ++s) sum += *t.span(static_cast<Stage>(s), static_cast<Stage>(s + 1));
    CHECK(sum == *t.pixel_to_photon());
  }
  CHECK(format_bench_result(bc, r).find("pixel-to-photon") != std::string::npos);
}

TEST_CASE("end to end: packet loss") {
  for (double loss : {0.05, 0.2}) {
    CAPTURE(loss);
    BenchConfig bc;
    bc.frames = 200;
    bc.fps = 100;
    bc.loss_rate = loss;
    bc.seed = 12;
    bc.intrinsics = small_k();
    const BenchResult r = run_bench(bc);
    CHECK(r.client.packets_dropped > 0);
    CHECK(r.server.frame_errors == 0);
    CHECK(r.server.reassembly.frames_emitted < 200);
    CHECK(r.server.reassembly.frames_emitted > 0);
    CHECK(r.max_tool_add_m * 1000.0 < 1e-3);
    for (std::size_t i = 1; i < r.client.received.size(); ++i)
      CHECK(r.client.received[i].frame_id > r.client.received[i - 1].frame_id);
    CHECK(r.completed == r.client.poses_rendered);
    if (r.completed < bc.frames) CHECK_FALSE(r.warnings.empty());
  }
}

TEST_CASE("injected delays show up in the right spans") {
  BenchConfig bc;
  bc.frames = 20;
  bc.delay_ms = 160;
  bc.infer_delay_ms = 12;
  bc.intrinsics = small_k();
  const BenchResult r = run_bench(bc);
  REQUIRE(r.report);
  CHECK(r.completed == 20);
  const auto& b = r.report->breakdown;
  CHECK(b[0].name == "video transmission");
  CHECK(b[0].ms.mean >= 150.0);
  CHECK(b[2].ms.mean >= 12.0);
  double total = 0.0;
  for (const auto& s : b) total += s.ms.mean;
  CHECK(total <= r.report->pixel_to_photon_ms.mean + 1e-9);
}

TEST_CASE("slow consumers do not stall intake") {
  SUBCASE("slow inference: stale frames are dropped, queue stays bounded") {
    ServerConfig sc;
    sc.infer_delay_ms = 120;
    Loopback lb(13, small_k(), sc);
    SyntheticSource src(13, lb.k, default_drill_model(), 45);
    const ClientResult c = run_client(lb.client(30, 45), src);
    const ServerStats s = lb.server->stats();
    CHECK(c.frames_sent == 45);
    CHECK(s.reassembly.frames_emitted == 45);
    CHECK(s.frames_dropped > 0);
    CHECK(s.max_queue_depth <= 2);
    CHECK(s.frames_queued == 45);
    CHECK(c.poses_received < 45);
    for (std::size_t i = 1; i < c.received.size(); ++i) CHECK(c.received[i].frame_id > c.received[i - 1].frame_id);
  }
  SUBCASE("slow rendering: the mailbox keeps only the newest pose") {
    Loopback lb(14, small_k());
    SyntheticSource src(14, lb.k, default_drill_model(), 60);
    ClientConfig cc = lb.client(60, 60);
    cc.render_ms = 80;
    const ClientResult c = run_client(cc, src);
    CHECK(c.frames_sent == 60);
    CHECK(c.poses_received >= 55);
    CHECK(c.mailbox_overwrites > 0);
    CHECK(c.poses_rendered < c.poses_received);
  }
}

TEST_CASE("server sessions return to idle") {
  ServerConfig sc;
  sc.idle_timeout = 200ms;
  Loopback lb(15, small_k(), sc);
  CHECK(lb.server->idle());
  for (int session = 0; session < 3; ++session) {
    SyntheticSource src(15, lb.k, default_drill_model(), 5);
    const ClientResult c = run_client(lb.client(50, 5), src);
    CHECK(c.poses_received == 5);
    std::this_thread::sleep_for(400ms);
    CHECK(lb.server->idle());
  }
  const ServerStats s = lb.server->stats();
  CHECK(s.sessions == 3);
  CHECK(s.probes == 3);
  CHECK(s.idle_resets >= 2);
  CHECK(s.poses_sent == 15);
  lb.server->stop();
  lb.server->stop();
}

TEST_CASE("client pacing: 30 fps for 10 s") {
  Loopback lb(16, small_k());
  SyntheticSource src(16, lb.k, default_drill_model());
  ClientConfig cc = lb.client(30, 0);
  cc.duration_s = 10.0;
  const auto t0 = std::chrono::steady_clock::now();
  const ClientResult c = run_client(cc, src);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(c.frames_sent >= 299);
  CHECK(c.frames_sent <= 301);
  CHECK(elapsed >= 9.9);
  for (std::size_t i = 0; i < c.received.size(); ++i) CHECK(c.received[i].frame_id < c.frames_sent);
}

TEST_CASE("overlay dump") {
  TempDir dir("overlay");
  Loopback lb(17, default_hmd_intrinsics());
  SyntheticSource src(17, lb.k, default_drill_model(), 10);
  ClientConfig cc = lb.client(10, 10);
  cc.overlay_dir = dir.path();
  cc.model = default_drill_model();
  const ClientResult c = run_client(cc, src);
  CHECK(c.overlays_written > 0);
  REQUIRE(c.max_overlay_discrepancy_px);
  CHECK(*c.max_overlay_discrepancy_px < 1.0);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    CHECK(e.path().extension() == ".ppm");
    CHECK(read_bytes(e.path()).rfind("P6\n896 504\n255\n", 0) == 0);
    ++files;
  }
  CHECK(files == c.overlays_written);

  const Pose6DoF p{{0.1, 0.2, 0.3}, {0.0, 0.0, 0.5}};
  Pose6DoF q = p;
  q.translation.x() += 0.001;
  CHECK(projection_discrepancy_px(p, p, default_drill_model(), lb.k) == 0.0);
  CHECK(projection_discrepancy_px(p, q, default_drill_model(), lb.k) > 1.0);
}

TEST_CASE("unreachable server") {
  // A bound socket that never answers the handshake.
  UdpSocket silent(0, true);
  ClientConfig cc;
  cc.server = Endpoint::loopback(silent.local_port());
  cc.probe_attempts = 3;
  cc.probe_interval = 50ms;
  SyntheticSource src(1, small_k(), default_drill_model(), 5);
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(run_client(cc, src), ConnectionError);
  CHECK(std::chrono::steady_clock::now() - t0 < 2s);
}

TEST_CASE("net helpers") {
  CHECK(Endpoint::parse("127.0.0.1:6000").port() == 6000);
  CHECK(Endpoint::parse("6001").port() == 6001);
  CHECK(Endpoint::parse("localhost:6002").port() == 6002);
  CHECK_THROWS_AS(Endpoint::parse("host:notaport"), ConfigError);
  CHECK_THROWS_AS(Endpoint::parse("1.2.3.4:70000"), ConfigError);

  UdpSocket a(0, true), b(0, true);
  LinkEmulator link(a, Endpoint::loopback(b.local_port()), LinkConfig{0.0, 30.0, 1});
  const std::vector<std::uint8_t> msg{1, 2, 3};
  const std::uint64_t sent_at = monotonic_us();
  link.submit(msg);
  std::vector<std::uint8_t> buf(64);
  const auto got = b.receive(buf, 1000ms);
  REQUIRE(got);
  CHECK(got->size == 3);
  CHECK(monotonic_us() - sent_at >= 29000);
  link.flush();
  CHECK(link.sent() == 1);
  CHECK_THROWS_AS(LinkEmulator(a, Endpoint::loopback(b.local_port()), LinkConfig{1.0, 0.0, 1}), ConfigError);
}

TEST_CASE("evaluate") {
  const CameraIntrinsics k = default_hmd_intrinsics();
  const ModelPoints model = default_drill_model();
  std::vector<PoseRecord> gt;
  for (std::uint32_t id = 0; id < 50; ++id) gt.push_back(scripted_pose(21, id, k));

  const EvaluationResult same = evaluate_records(gt, gt, model);
  CHECK(same.report.n_frames == 50);
  CHECK(same.report.tool_add_mm.mean == 0.0);
  CHECK(same.report.tip_error_mm.mean == 0.0);
  CHECK(same.report.direction_error_deg.mean == 0.0);
  CHECK(same.report.hand_add_mm.mean == 0.0);

  std::vector<PoseRecord> shifted = gt;
  for (auto& r : shifted) r.pose.translation.x() += 0.005;
  const EvaluationResult five = evaluate_records(shifted, gt, model);
  CHECK(five.report.tool_add_mm.mean == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(five.report.tool_add_mm.std < 1e-9);
  CHECK(five.report.direction_error_deg.mean == 0.0);
  CHECK(format_metric_table(five.report, "x").find("5.00 ± 0.00") != std::string::npos);

  // Randomized predictions against a direct recomputation.
  Rng rng(22);
  std::vector<PoseRecord> noisy = gt;
  for (auto& r : noisy) {
    r.pose.rotation += rng.vector(-0.1, 0.1);
    r.pose.translation += rng.vector(-0.02, 0.02);
    r.hand = r.hand + rng.hand(0.01);
  }
  const EvaluationResult ev = evaluate_records(noisy, gt, model);
  double add_sum = 0.0, hand_sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Eigen::Matrix3d ra = quaternion_oracle(gt[i].pose.rotation), rb = quaternion_oracle(noisy[i].pose.rotation);
    double d = 0.0;
    for (Eigen::Index j = 0; j < model.points.cols(); ++j)
      d += ((ra * model.points.col(j) + gt[i].pose.translation) - (rb * model.points.col(j) + noisy[i].pose.translation))
               .norm();
    add_sum += d / static_cast<double>(model.points.cols());
    double h = 0.0;
    for (int j = 0; j < 21; ++j) h += (gt[i].hand.col(j) - noisy[i].hand.col(j)).norm();
    hand_sum += h / 21.0;
    CHECK(std::abs(ev.frames[i].tool_add_m - d / static_cast<double>(model.points.cols())) < 1e-9);
  }
  CHECK(std::abs(ev.report.tool_add_mm.mean - 1000.0 * add_sum / 50.0) < 1e-9);
  CHECK(std::abs(ev.report.hand_add_mm.mean - 1000.0 * hand_sum / 50.0) < 1e-9);

  // Missing ids are listed and excluded.
  std::vector<PoseRecord> partial(gt.begin(), gt.begin() + 40);
  partial.push_back(scripted_pose(21, 999, k));
  const EvaluationResult part = evaluate_records(partial, gt, model);
  CHECK(part.report.n_frames == 40);
  CHECK(part.missing_predictions.size() == 10);
  CHECK(part.missing_predictions.front() == 40);
  CHECK(part.unmatched_predictions == std::vector<std::uint32_t>{999});

  CHECK_THROWS_AS(evaluate_records({scripted_pose(21, 500, k)}, gt, model), DomainError);
  std::vector<PoseRecord> dup = gt;
  dup.push_back(gt[3]);
  CHECK_THROWS_AS(evaluate_records(dup, gt, model), ConfigError);
  ModelPoints no_tip = model;
  no_tip.tip.reset();
  CHECK_THROWS_AS(evaluate_records(gt, gt, no_tip), ConfigError);

  // Files in, files out; repeated runs are byte-identical.
  TempDir dir("evaluate");
  write_pose_records(dir / "gt.jsonl", gt);
  write_pose_records(dir / "pred.jsonl", noisy);
  std::ofstream(dir / "model.json") << model_to_json(model).dump();
  const EvaluationResult a = evaluate_files(dir / "pred.jsonl", dir / "gt.jsonl", dir / "model.json");
  write_evaluation(a, dir / "run1");
  const EvaluationResult b = evaluate_files(dir / "pred.jsonl", dir / "gt.jsonl", dir / "model.json");
  write_evaluation(b, dir / "run2");
  for (const char* ext : {".txt", ".csv", ".frames.jsonl"}) {
    const std::string one = read_bytes(dir / (std::string("run1") + ext));
    CHECK_FALSE(one.empty());
    CHECK(one == read_bytes(dir / (std::string("run2") + ext)));
  }
  CHECK(a.report.tool_add_mm.mean == ev.report.tool_add_mm.mean);
}
