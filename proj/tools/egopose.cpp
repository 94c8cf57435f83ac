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

// egopose: serve / stream / evaluate / bench.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <system_error>

#include "CLI11.hpp"

#include "egopose/backend.hpp"
#include "egopose/bench.hpp"
#include "egopose/client.hpp"
#include "egopose/errors.hpp"
#include "egopose/evaluate.hpp"
#include "egopose/io.hpp"
#include "egopose/scripted.hpp"
#include "egopose/server.hpp"

namespace {

using namespace egopose;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitThreshold = 3;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

CameraIntrinsics intrinsics_or_default(const std::string& path) {
  return path.empty() ? default_hmd_intrinsics() : load_intrinsics(path);
}

ModelPoints model_or_default(const std::string& path) { return path.empty() ? default_drill_model() : load_model(path); }

void write_traces(const std::string& path, const std::vector<LatencyTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& t : traces) out << trace_to_json(t).dump() << '\n';
}

struct ServeOptions {
  std::uint16_t port = 5600;
  std::string intrinsics;
  std::string model_meta;
  std::string anchors;
  std::string backend = "synthetic";
  std::string graph_file;
  std::string script;
  std::uint64_t seed = 1;
  double score_thresh = 0.5;
  double iou_thresh = 0.5;
  double infer_delay_ms = 0.0;
  double duration_s = 0.0;
  std::string predictions_out;
  std::string traces_out;
};

int cmd_serve(const ServeOptions& o) {
  const CameraIntrinsics k = intrinsics_or_default(o.intrinsics);
  if (!o.model_meta.empty()) load_model(o.model_meta).validate();
  const AnchorConfig anchors = o.anchors.empty() ? AnchorConfig{} : load_anchor_config(o.anchors);
  AnchorGrid grid = generate_anchors(kNetworkInputSize, kNetworkInputSize, anchors);

  std::shared_ptr<InferenceBackend> backend;
  if (o.backend == "graph") {
    if (o.graph_file.empty()) throw ConfigError("--backend graph needs --graph-file");
    backend = std::make_shared<GraphBackend>(o.graph_file, std::move(grid));
  } else {
    SyntheticBackend::Script script;
    if (!o.script.empty()) {
      auto table = std::make_shared<std::map<std::uint32_t, PoseRecord>>();
      for (auto& r : read_pose_records(o.script)) (*table)[r.frame_id] = r;
      script = [table](std::uint32_t id) {
        auto it = table->find(id);
        if (it == table->end()) throw EncodeError("no scripted pose for frame " + std::to_string(id));
        return it->second;
      };
    } else {
      script = [seed = o.seed, k](std::uint32_t id) { return scripted_pose(seed, id, k); };
    }
    backend = std::make_shared<SyntheticBackend>(std::move(grid), std::move(script));
  }

  ServerConfig sc;
  sc.port = o.port;
  sc.intrinsics = k;
  sc.filter = FilterParams{o.score_thresh, o.iou_thresh};
  sc.infer_delay_ms = o.infer_delay_ms;
  sc.keep_history = !o.predictions_out.empty() || !o.traces_out.empty();
  Server server(sc, backend);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread timer;
  if (o.duration_s > 0.0) {
    timer = std::thread([d = o.duration_s] {
      const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(static_cast<int>(d * 1000));
      while (!g_stop && std::chrono::steady_clock::now() < until)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      g_stop = true;
    });
  }
  std::cerr << "egopose serve: port " << server.port() << ", backend " << o.backend << '\n';
  server.run(g_stop);
  if (timer.joinable()) timer.join();

  const ServerStats s = server.stats();
  std::printf("frames processed %llu, poses sent %llu, no detection %llu, errors %llu, queue drops %llu, "
              "packets %llu (malformed %llu, stale %llu, duplicate %llu)\n",
              static_cast<unsigned long long>(s.frames_processed), static_cast<unsigned long long>(s.poses_sent),
              static_cast<unsigned long long>(s.no_detection), static_cast<unsigned long long>(s.frame_errors),
              static_cast<unsigned long long>(s.frames_dropped),
              static_cast<unsigned long long>(s.reassembly.packets),
              static_cast<unsigned long long>(s.reassembly.malformed),
              static_cast<unsigned long long>(s.reassembly.stale_packets),
              static_cast<unsigned long long>(s.reassembly.duplicates));
  if (!o.predictions_out.empty()) write_pose_records(o.predictions_out, server.predictions());
  if (!o.traces_out.empty()) write_traces(o.traces_out, server.traces());
  return kExitOk;
}

struct StreamOptions {
  std::string server = "127.0.0.1:5600";
  double fps = 30.0;
  std::string source = "synthetic";
  std::string overlay_dir;
  std::string intrinsics;
  std::string model_meta;
  std::uint32_t frames = 300;
  double duration_s = 0.0;
  double loss_rate = 0.0;
  double delay_ms = 0.0;
  std::string received_out;
  std::string traces_out;
};

int cmd_stream(const StreamOptions& o) {
  const CameraIntrinsics k = intrinsics_or_default(o.intrinsics);
  const ModelPoints model = model_or_default(o.model_meta);
  auto source = open_frame_source(o.source, k, model, o.frames);

  ClientConfig cc;
  cc.server = Endpoint::parse(o.server);
  cc.fps = o.fps;
  cc.max_frames = o.frames;
  cc.duration_s = o.duration_s;
  cc.link = LinkConfig{o.loss_rate, o.delay_ms, 1};
  cc.model = model;
  if (!o.overlay_dir.empty()) cc.overlay_dir = o.overlay_dir;

  const ClientResult r = run_client(cc, *source);
  std::printf("frames sent %u, poses received %u, rendered %u\n", r.frames_sent, r.poses_received, r.poses_rendered);
  if (r.max_overlay_discrepancy_px)
    std::printf("max projected ground-truth vs predicted discrepancy: %.4f px\n", *r.max_overlay_discrepancy_px);
  if (r.overlays_written) std::printf("overlays written: %u to %s\n", r.overlays_written, o.overlay_dir.c_str());
  try {
    std::cout << '\n' << format_latency_report(latency_report(r.traces));
  } catch (const DomainError&) {
    std::cout << "no complete round trips\n";
  }
  if (!o.received_out.empty()) write_pose_records(o.received_out, r.received);
  if (!o.traces_out.empty()) write_traces(o.traces_out, r.traces);
  return kExitOk;
}

struct EvaluateOptions {
  std::string pred;
  std::string gt;
  std::string model_meta;
  std::string out;
  std::string title = "EgoPose";
  double assert_tool_add_mm = -1.0;
};

int cmd_evaluate(const EvaluateOptions& o) {
  const EvaluationResult r = evaluate_files(o.pred, o.gt, o.model_meta);
  const std::string table = format_metric_table(r.report, o.title);
  std::cout << table;
  if (!o.out.empty()) write_evaluation(r, o.out, o.title);
  if (o.assert_tool_add_mm >= 0.0 && r.report.tool_add_mm.mean > o.assert_tool_add_mm) {
    std::fprintf(stderr, "assert: mean tool ADD %.4f mm exceeds %.4f mm\n", r.report.tool_add_mm.mean,
                 o.assert_tool_add_mm);
    return kExitThreshold;
  }
  return kExitOk;
}

struct BenchOptions {
  BenchConfig config;
  std::string intrinsics;
  std::string model_meta;
  std::string traces_out;
  double assert_p2p_ms = -1.0;
  double assert_tolerance = 0.15;
};

int cmd_bench(BenchOptions o) {
  o.config.intrinsics = intrinsics_or_default(o.intrinsics);
  o.config.model = model_or_default(o.model_meta);
  const BenchResult r = run_bench(o.config);
  std::cout << format_bench_result(o.config, r);
  if (!o.traces_out.empty()) write_traces(o.traces_out, r.traces);
  if (o.assert_p2p_ms > 0.0) {
    const double lo = o.assert_p2p_ms * (1.0 - o.assert_tolerance);
    const double hi = o.assert_p2p_ms * (1.0 + o.assert_tolerance);
    const bool ok = r.report && r.report->pixel_to_photon_ms.mean >= lo && r.report->pixel_to_photon_ms.mean <= hi;
    if (!ok) {
      std::fprintf(stderr, "assert: pixel-to-photon mean %s outside [%.1f, %.1f] ms\n",
                   r.report ? std::to_string(r.report->pixel_to_photon_ms.mean).c_str() : "n/a", lo, hi);
      return kExitThreshold;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tool and hand pose streaming pipeline"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log session events to stderr");

  ServeOptions serve;
  auto* s = app.add_subcommand("serve", "Run the pose server");
  s->add_option("--port", serve.port, "UDP port")->capture_default_str();
  s->add_option("--intrinsics", serve.intrinsics, "Camera intrinsics JSON (default: built-in 896x504 HMD)");
  s->add_option("--model-meta", serve.model_meta, "Tool model JSON");
  s->add_option("--anchors", serve.anchors, "Anchor config JSON");
  s->add_option("--backend", serve.backend, "Inference backend")
      ->check(CLI::IsMember({"synthetic", "graph"}))
      ->capture_default_str();
  s->add_option("--graph-file", serve.graph_file, "ONNX graph for --backend graph");
  s->add_option("--script", serve.script, "Pose JSON-lines file driving the synthetic backend");
  s->add_option("--seed", serve.seed, "Seed of the scripted poses when no --script is given")->capture_default_str();
  s->add_option("--score-thresh", serve.score_thresh)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  s->add_option("--iou-thresh", serve.iou_thresh)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  s->add_option("--infer-delay-ms", serve.infer_delay_ms)->check(CLI::NonNegativeNumber);
  s->add_option("--duration-s", serve.duration_s, "Stop after this long (default: until SIGINT)");
  s->add_option("--predictions-out", serve.predictions_out, "Write predictions as JSON lines on exit");
  s->add_option("--traces-out", serve.traces_out, "Write server latency traces as JSON lines on exit");

  StreamOptions stream;
  auto* c = app.add_subcommand("stream", "Run the head-mounted display simulator");
  c->add_option("--server", stream.server, "host:port")->capture_default_str();
  c->add_option("--fps", stream.fps)->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--source", stream.source, "synthetic, synthetic:SEED or an I420 fixture directory")
      ->capture_default_str();
  c->add_option("--overlay-dir", stream.overlay_dir, "Write PPM overlays of projected model points");
  c->add_option("--intrinsics", stream.intrinsics);
  c->add_option("--model-meta", stream.model_meta);
  c->add_option("--frames", stream.frames, "Frames to send (0: unlimited)")->capture_default_str();
  c->add_option("--duration-s", stream.duration_s);
  c->add_option("--loss-rate", stream.loss_rate)->check(CLI::Range(0.0, 0.99));
  c->add_option("--delay-ms", stream.delay_ms)->check(CLI::NonNegativeNumber);
  c->add_option("--received-out", stream.received_out, "Write received poses as JSON lines");
  c->add_option("--traces-out", stream.traces_out, "Write client latency traces as JSON lines");

  EvaluateOptions eval;
  auto* e = app.add_subcommand("evaluate", "Score predictions against ground truth");
  e->add_option("--pred", eval.pred)->required()->check(CLI::ExistingFile);
  e->add_option("--gt", eval.gt)->required()->check(CLI::ExistingFile);
  e->add_option("--model-meta", eval.model_meta)->required()->check(CLI::ExistingFile);
  e->add_option("--out", eval.out, "Output stem for .txt, .csv and .frames.jsonl");
  e->add_option("--title", eval.title)->capture_default_str();
  e->add_option("--assert-tool-add-mm", eval.assert_tool_add_mm, "Exit 3 if mean tool ADD exceeds this");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Loopback latency benchmark");
  b->add_option("--frames", bench.config.frames)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--loss-rate", bench.config.loss_rate)->check(CLI::Range(0.0, 0.99))->capture_default_str();
  b->add_option("--delay-ms", bench.config.delay_ms, "Video transmission delay")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  b->add_option("--infer-delay-ms", bench.config.infer_delay_ms)->check(CLI::NonNegativeNumber)->capture_default_str();
  b->add_option("--render-ms", bench.config.render_ms)->check(CLI::NonNegativeNumber);
  b->add_option("--fps", bench.config.fps)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--seed", bench.config.seed)->capture_default_str();
  b->add_option("--intrinsics", bench.intrinsics);
  b->add_option("--model-meta", bench.model_meta);
  b->add_option("--traces-out", bench.traces_out, "Write merged latency traces as JSON lines");
  b->add_option("--assert-p2p-ms", bench.assert_p2p_ms, "Exit 3 unless the pixel-to-photon mean is near this");
  b->add_option("--assert-tolerance", bench.assert_tolerance, "Relative tolerance for --assert-p2p-ms")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  set_log_level(verbose ? LogLevel::Info : LogLevel::Warn);

  try {
    if (*s) return cmd_serve(serve);
    if (*c) return cmd_stream(stream);
    if (*e) return cmd_evaluate(eval);
    if (*b) return cmd_bench(bench);
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const nlohmann::json::exception& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const std::system_error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitRuntime;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
