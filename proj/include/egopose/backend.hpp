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

// Inference backends: the network stage of the server.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>

#include "egopose/detection.hpp"
#include "egopose/io.hpp"
#include "egopose/preprocess.hpp"

namespace egopose {

struct InferenceContext {
  std::uint32_t frame_id = 0;
  /// Intrinsics of the 256x256 network input.
  CameraIntrinsics intrinsics;
};

class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;
  /// Heads with exactly grid().size() rows.
  virtual RawHeads infer(const InputTensor& tensor, const InferenceContext& ctx) = 0;
  virtual const AnchorGrid& grid() const = 0;
};

/// Deterministic oracle: ignores the pixels and encodes the scripted pose.
RawHeads synthetic_backend_infer(const InputTensor& tensor, const Pose6DoF& scripted_pose,
                                 const HandSkeleton21& scripted_hand, const AnchorGrid& grid,
                                 const CameraIntrinsics& network_k);

class SyntheticBackend final : public InferenceBackend {
 public:
  using Script = std::function<PoseRecord(std::uint32_t frame_id)>;

  SyntheticBackend(AnchorGrid grid, Script script);

  RawHeads infer(const InputTensor& tensor, const InferenceContext& ctx) override;
  const AnchorGrid& grid() const override { return grid_; }

 private:
  AnchorGrid grid_;
  Script script_;
};

namespace onnx {
class Graph;
}

/// Executes a serialized ONNX graph. Output names and shapes follow the
/// head contract: class_logit [1,A,1] or [1,A], box_regress [1,A,4],
/// rotation [1,A,3], center_offset [1,A,2], depth [1,A,1] or [1,A],
/// hand [1,A,63].
class GraphBackend final : public InferenceBackend {
 public:
  /// Throws BackendError on a missing or malformed file, or when the
  /// declared input is not (1,3,256,256).
  GraphBackend(const std::filesystem::path& graph_file, AnchorGrid grid);
  ~GraphBackend() override;

  /// Throws BackendError with declared-vs-actual shapes on a head mismatch.
  RawHeads infer(const InputTensor& tensor, const InferenceContext& ctx) override;
  const AnchorGrid& grid() const override { return grid_; }

 private:
  std::unique_ptr<onnx::Graph> graph_;
  std::string input_name_;
  AnchorGrid grid_;
};

}  // namespace egopose
