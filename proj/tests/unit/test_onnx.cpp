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

// Interpreter checks against reference outputs recorded from onnx.reference
// (tests/data/onnx, regenerate with tools/make_onnx_oracles.py), and graphs
// assembled here through the generated protobuf classes.

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "egopose/backend.hpp"
#include "egopose/onnx_graph.hpp"
#include "json.hpp"
#include "onnx.pb.h"
#include "support.hpp"

using namespace egopose;
using egopose::testing::Rng;
using egopose::testing::TempDir;
using nlohmann::json;
namespace ox = egopose::onnx;

namespace {

const std::filesystem::path kOracleDir = std::filesystem::path(EGOPOSE_TEST_DATA) / "onnx";

ox::Tensor tensor_from_json(const json& j) {
  std::vector<float> values;
  for (double v : j.at("data")) values.push_back(static_cast<float>(v));
  return ox::Tensor::floats(j.at("shape").get<std::vector<std::int64_t>>(), std::move(values));
}

// Minimal builders over the generated message classes.
struct GraphBuilder {
  ::onnx::ModelProto model;
  ::onnx::GraphProto* graph;

  GraphBuilder() : graph(model.mutable_graph()) {
    model.set_ir_version(8);
    auto* opset = model.add_opset_import();
    opset->set_domain("");
    opset->set_version(13);
    graph->set_name("built");
  }

  static void set_shape(::onnx::ValueInfoProto* v, const std::vector<std::int64_t>& shape) {
    auto* t = v->mutable_type()->mutable_tensor_type();
    t->set_elem_type(::onnx::TensorProto::FLOAT);
    auto* s = t->mutable_shape();
    for (auto d : shape) {
      if (d < 0) {
        s->add_dim()->set_dim_param("n");
      } else {
        s->add_dim()->set_dim_value(d);
      }
    }
  }

  void input(const std::string& name, const std::vector<std::int64_t>& shape) {
    auto* v = graph->add_input();
    v->set_name(name);
    set_shape(v, shape);
  }

  void output(const std::string& name, const std::vector<std::int64_t>& shape) {
    auto* v = graph->add_output();
    v->set_name(name);
    set_shape(v, shape);
  }

  void floats(const std::string& name, const std::vector<std::int64_t>& shape, const std::vector<float>& values) {
    auto* t = graph->add_initializer();
    t->set_name(name);
    t->set_data_type(::onnx::TensorProto::FLOAT);
    for (auto d : shape) t->add_dims(d);
    for (float v : values) t->add_float_data(v);
  }

  void ints(const std::string& name, const std::vector<std::int64_t>& values) {
    auto* t = graph->add_initializer();
    t->set_name(name);
    t->set_data_type(::onnx::TensorProto::INT64);
    t->add_dims(static_cast<std::int64_t>(values.size()));
    for (auto v : values) t->add_int64_data(v);
  }

  ::onnx::NodeProto* node(const std::string& op, const std::vector<std::string>& in,
                          const std::vector<std::string>& out) {
    auto* n = graph->add_node();
    n->set_op_type(op);
    for (const auto& s : in) n->add_input(s);
    for (const auto& s : out) n->add_output(s);
    return n;
  }

  std::vector<std::uint8_t> bytes() const {
    const std::string s = model.SerializeAsString();
    return {s.begin(), s.end()};
  }

  std::filesystem::path save(const std::filesystem::path& p) const {
    std::ofstream out(p, std::ios::binary);
    out << model.SerializeAsString();
    return p;
  }
};

void int_attr(::onnx::NodeProto* n, const std::string& name, std::int64_t v) {
  auto* a = n->add_attribute();
  a->set_name(name);
  a->set_type(::onnx::AttributeProto::INT);
  a->set_i(v);
}

const char* kHeadNames[] = {"class_logit", "box_regress", "rotation", "center_offset", "depth", "hand"};
const int kHeadCols[] = {1, 4, 3, 2, 1, 63};

std::vector<float> head_values(const RawHeads& h, int which) {
  std::vector<float> out;
  for (Eigen::Index a = 0; a < h.size(); ++a) {
    switch (which) {
      case 0: out.push_back(static_cast<float>(h.class_logit(a))); break;
      case 1: for (int c = 0; c < 4; ++c) out.push_back(static_cast<float>(h.box_regress(a, c))); break;
      case 2: for (int c = 0; c < 3; ++c) out.push_back(static_cast<float>(h.rotation(a, c))); break;
      case 3: for (int c = 0; c < 2; ++c) out.push_back(static_cast<float>(h.center_offset(a, c))); break;
      case 4: out.push_back(static_cast<float>(h.depth(a))); break;
      default: for (int c = 0; c < 63; ++c) out.push_back(static_cast<float>(h.hand(a, c))); break;
    }
  }
  return out;
}

// Conv(1x1, zero weights) -> GlobalAveragePool -> Reshape [1,1,1] gives a
// zero that depends on the input; each head adds a baked [1,A,k] constant.
GraphBuilder constant_head_graph(const RawHeads& heads, std::int64_t input_side = kNetworkInputSize) {
  GraphBuilder g;
  const auto anchors = static_cast<std::int64_t>(heads.size());
  g.input("image", {1, 3, input_side, input_side});
  g.floats("zero_w", {1, 3, 1, 1}, {0.0f, 0.0f, 0.0f});
  g.ints("unit_shape", {1, 1, 1});
  g.node("Conv", {"image", "zero_w"}, {"zc"});
  g.node("GlobalAveragePool", {"zc"}, {"zg"});
  g.node("Reshape", {"zg", "unit_shape"}, {"zero"});
  for (int h = 0; h < 6; ++h) {
    const std::string name = kHeadNames[h];
    g.floats(name + "_const", {1, anchors, kHeadCols[h]}, head_values(heads, h));
    g.node("Add", {"zero", name + "_const"}, {name});
    g.output(name, {1, anchors, kHeadCols[h]});
  }
  return g;
}

AnchorGrid tiny_grid() {
  AnchorConfig c;
  c.strides = {128};
  c.scales = {1.0};
  c.ratios = {1.0, 2.0};
  return generate_anchors(256, 256, c);
}

CameraIntrinsics network_k() {
  CameraIntrinsics k;
  k.fx = 196.0;
  k.fy = 348.4;
  k.px = 128.0;
  k.py = 128.0;
  k.width = 256;
  k.height = 256;
  return k;
}

}  // namespace

TEST_CASE("operators match the reference evaluator") {
  int cases = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kOracleDir)) {
    if (entry.path().extension() != ".onnx") continue;
    ++cases;
    CAPTURE(entry.path().filename().string());
    const ox::Graph g = ox::Graph::load(entry.path());
    std::ifstream in(std::filesystem::path(entry.path()).replace_extension(".json"));
    const json doc = json::parse(in);

    std::map<std::string, ox::Tensor> feeds;
    for (const auto& [name, t] : doc.at("inputs").items()) feeds.emplace(name, tensor_from_json(t));
    const auto outputs = g.run(feeds);
    for (const auto& [name, t] : doc.at("outputs").items()) {
      REQUIRE(outputs.count(name) == 1);
      const ox::Tensor want = tensor_from_json(t);
      const ox::Tensor& got = outputs.at(name);
      REQUIRE(got.shape == want.shape);
      for (std::size_t i = 0; i < want.f.size(); ++i)
        CHECK(std::abs(got.f[i] - want.f[i]) <= 1e-5f * std::max(1.0f, std::abs(want.f[i])));
    }
    // Deterministic: a second run is bit-identical.
    const auto again = g.run(feeds);
    for (const auto& [name, t] : outputs) CHECK(again.at(name).f == t.f);
  }
  CHECK(cases >= 10);
}

TEST_CASE("graph loading and run errors") {
  TempDir dir("onnx");
  CHECK_THROWS_AS(ox::Graph::load(dir / "absent.onnx"), BackendError);
  const std::vector<std::uint8_t> junk{0xFF, 0xFF, 0xFF, 0x01, 0x02};
  CHECK_THROWS_AS(ox::Graph::parse(junk), BackendError);

  GraphBuilder unknown;
  unknown.input("x", {1, 2});
  unknown.output("y", {1, 2});
  unknown.node("Softmax", {"x"}, {"y"});
  try {
    ox::Graph::parse(unknown.bytes());
    FAIL("expected a BackendError");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()).find("Softmax") != std::string::npos);
  }

  GraphBuilder relu;
  relu.input("x", {-1, 3});
  relu.output("y", {-1, 3});
  relu.node("Relu", {"x"}, {"y"});
  const ox::Graph g = ox::Graph::parse(relu.bytes());
  REQUIRE(g.inputs().size() == 1);
  CHECK(g.inputs()[0].shape == std::vector<std::int64_t>{-1, 3});
  // Dynamic leading dimension accepts any size.
  const auto out = g.run({{"x", ox::Tensor::floats({2, 3}, {-1, 2, -3, 4, -5, 6})}});
  CHECK(out.at("y").f == std::vector<float>{0, 2, 0, 4, 0, 6});
  CHECK_THROWS_AS(g.run({{"x", ox::Tensor::floats({2, 4}, std::vector<float>(8))}}), BackendError);
  CHECK_THROWS_AS(g.run({}), BackendError);

  GraphBuilder bad_add;
  bad_add.input("x", {2, 3});
  bad_add.floats("k", {4}, {1, 2, 3, 4});
  bad_add.output("y", {2, 3});
  bad_add.node("Add", {"x", "k"}, {"y"});
  CHECK_THROWS_AS(ox::Graph::parse(bad_add.bytes()).run({{"x", ox::Tensor::floats({2, 3}, std::vector<float>(6))}}),
                  BackendError);

  GraphBuilder flatten;
  flatten.input("x", {2, 3, 4});
  flatten.output("y", {6, 4});
  int_attr(flatten.node("Flatten", {"x"}, {"y"}), "axis", 2);
  const auto fl = ox::Graph::parse(flatten.bytes()).run({{"x", ox::Tensor::floats({2, 3, 4}, std::vector<float>(24))}});
  CHECK(fl.at("y").shape == std::vector<std::int64_t>{6, 4});
}

TEST_CASE("graph backend: constant heads") {
  TempDir dir("graph");
  const AnchorGrid grid = generate_anchors(256, 256);
  REQUIRE(grid.size() == 12276);
  const CameraIntrinsics k = network_k();
  const Pose6DoF target{{0.3, -1.1, 0.4}, {0.05, -0.03, 0.62}};
  Rng rng(91);
  const HandSkeleton21 hand = rng.hand();
  const RawHeads baked = encode_ground_truth(target, hand, grid, k);
  const auto path = constant_head_graph(baked).save(dir / "constant.onnx");

  GraphBackend backend(path, grid);
  InputTensor zeros;
  InputTensor noise;
  for (auto& v : noise.data) v = static_cast<float>(rng.normal());

  const RawHeads heads = backend.infer(zeros, {0, k});
  CHECK(heads.size() == grid.size());
  CHECK(heads.hand.allFinite());
  CHECK(backend.infer(noise, {1, k}) == heads);

  const auto det = filter_detections(decode_heads(heads, grid, k), FilterParams{}, grid);
  REQUIRE(det);
  CHECK((det->pose.translation - target.translation).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((det->pose.rotation - target.rotation).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((det->hand - hand).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("graph backend: contract errors") {
  TempDir dir("graph_err");
  const AnchorGrid grid = tiny_grid();
  REQUIRE(grid.size() == 8);
  RawHeads heads(grid.size());
  heads.set_zero();

  CHECK_THROWS_AS(GraphBackend(dir / "missing.onnx", grid), BackendError);

  const auto wrong_input = constant_head_graph(heads, 128).save(dir / "small_input.onnx");
  try {
    GraphBackend b(wrong_input, grid);
    FAIL("expected a BackendError");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()).find("(1,3,128,128)") != std::string::npos);
  }

  // Heads tiled for another grid.
  const auto other = constant_head_graph(RawHeads(grid.size() + 1)).save(dir / "other_grid.onnx");
  GraphBackend mismatched(other, grid);
  try {
    mismatched.infer(InputTensor{}, {0, network_k()});
    FAIL("expected a BackendError");
  } catch (const BackendError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("declared") != std::string::npos);
    CHECK(msg.find("actual") != std::string::npos);
    CHECK(msg.find("actual (1,9,1)") != std::string::npos);
  }

  // A head output missing altogether.
  GraphBuilder partial = constant_head_graph(heads);
  partial.graph->mutable_output()->RemoveLast();
  GraphBackend no_hand(partial.save(dir / "partial.onnx"), grid);
  CHECK_THROWS_WITH_AS(no_hand.infer(InputTensor{}, {0, network_k()}), doctest::Contains("hand"), BackendError);
}

TEST_CASE("synthetic backend") {
  const AnchorGrid grid = generate_anchors(256, 256);
  const CameraIntrinsics k = network_k();
  const Pose6DoF p{{0, 0, 0}, {0, 0, 0.5}};
  const RawHeads a = synthetic_backend_infer(InputTensor{}, p, HandSkeleton21::Zero(), grid, k);
  const RawHeads b = synthetic_backend_infer(InputTensor{}, p, HandSkeleton21::Zero(), grid, k);
  CHECK(a == b);
  const auto det = filter_detections(decode_heads(a, grid, k), FilterParams{}, grid);
  REQUIRE(det);
  CHECK((det->pose.translation - p.translation).norm() < 1e-6);
  CHECK(det->pose.rotation.norm() < 1e-6);
  CHECK_THROWS_AS(synthetic_backend_infer(InputTensor{}, Pose6DoF{{0, 0, 0}, {0, 0, -0.5}}, HandSkeleton21::Zero(),
                                          grid, k),
                  EncodeError);

  SyntheticBackend backend(grid, [](std::uint32_t id) {
    PoseRecord r;
    r.frame_id = id;
    r.pose.translation = Eigen::Vector3d(0.01 * id, 0.0, 0.5);
    return r;
  });
  const auto d3 = filter_detections(decode_heads(backend.infer(InputTensor{}, {3, k}), grid, k), FilterParams{}, grid);
  REQUIRE(d3);
  CHECK(std::abs(d3->pose.translation.x() - 0.03) < 1e-9);
  CHECK_THROWS_AS(SyntheticBackend(grid, nullptr), ConfigError);
}
