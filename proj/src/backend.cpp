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

#include "egopose/backend.hpp"

#include <string>

#include "egopose/errors.hpp"
#include "egopose/onnx_graph.hpp"

namespace egopose {

RawHeads synthetic_backend_infer(const InputTensor& /*tensor*/, const Pose6DoF& scripted_pose,
                                 const HandSkeleton21& scripted_hand, const AnchorGrid& grid,
                                 const CameraIntrinsics& network_k) {
  return encode_ground_truth(scripted_pose, scripted_hand, grid, network_k);
}

SyntheticBackend::SyntheticBackend(AnchorGrid grid, Script script) : grid_(std::move(grid)), script_(std::move(script)) {
  if (!script_) throw ConfigError("synthetic backend needs a pose script");
}

RawHeads SyntheticBackend::infer(const InputTensor& tensor, const InferenceContext& ctx) {
  const PoseRecord rec = script_(ctx.frame_id);
  return synthetic_backend_infer(tensor, rec.pose, rec.hand, grid_, ctx.intrinsics);
}

namespace {

template <int Cols>
void copy_head(const std::map<std::string, onnx::Tensor>& outputs, const std::string& name, Eigen::Index anchors,
               HeadMatrix<Cols>& dst) {
  auto it = outputs.find(name);
  if (it == outputs.end()) throw BackendError("graph has no output named '" + name + "'");
  const onnx::Tensor& t = it->second;
  const std::vector<std::int64_t> want{1, anchors, Cols};
  bool ok = t.dtype == onnx::DType::Float && t.shape == want;
  if (!ok && Cols == 1) ok = t.dtype == onnx::DType::Float && t.shape == std::vector<std::int64_t>{1, anchors};
  if (!ok)
    throw BackendError("graph output '" + name + "': declared " + onnx::shape_string(want) + ", actual " +
                       t.shape_string() + (t.dtype == onnx::DType::Float ? "" : " (not float)"));
  dst.resize(anchors, Cols);
  for (Eigen::Index a = 0; a < anchors; ++a)
    for (int c = 0; c < Cols; ++c) dst(a, c) = static_cast<double>(t.f[static_cast<std::size_t>(a * Cols + c)]);
}

}  // namespace

GraphBackend::GraphBackend(const std::filesystem::path& graph_file, AnchorGrid grid)
    : graph_(std::make_unique<onnx::Graph>(onnx::Graph::load(graph_file))), grid_(std::move(grid)) {
  if (graph_->inputs().empty()) throw BackendError("graph declares no runtime input");
  const onnx::ValueInfo& in = graph_->inputs().front();
  const std::vector<std::int64_t> want{1, 3, kNetworkInputSize, kNetworkInputSize};
  bool ok = in.shape.empty() || in.shape.size() == want.size();
  for (std::size_t k = 0; ok && k < in.shape.size(); ++k) ok = in.shape[k] < 0 || in.shape[k] == want[k];
  if (!ok)
    throw BackendError("graph input '" + in.name + "': declared " + onnx::shape_string(in.shape) + ", expected " +
                       onnx::shape_string(want));
  input_name_ = in.name;
}

GraphBackend::~GraphBackend() = default;

RawHeads GraphBackend::infer(const InputTensor& tensor, const InferenceContext& /*ctx*/) {
  std::map<std::string, onnx::Tensor> feeds;
  feeds.emplace(input_name_, onnx::Tensor::floats({1, 3, kNetworkInputSize, kNetworkInputSize}, tensor.data));
  const auto outputs = graph_->run(feeds);
  const Eigen::Index anchors = grid_.size();
  RawHeads heads;
  copy_head(outputs, "class_logit", anchors, heads.class_logit);
  copy_head(outputs, "box_regress", anchors, heads.box_regress);
  copy_head(outputs, "rotation", anchors, heads.rotation);
  copy_head(outputs, "center_offset", anchors, heads.center_offset);
  copy_head(outputs, "depth", anchors, heads.depth);
  copy_head(outputs, "hand", anchors, heads.hand);
  heads.check(anchors);
  return heads;
}

}  // namespace egopose
