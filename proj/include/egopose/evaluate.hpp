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

// Offline evaluation of prediction files against ground truth.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "egopose/io.hpp"
#include "egopose/metrics.hpp"

namespace egopose {

struct EvaluationResult {
  std::vector<FrameMetrics> frames;
  MetricReport report;
  /// Ground-truth ids with no prediction, and predictions with no ground truth.
  std::vector<std::uint32_t> missing_predictions;
  std::vector<std::uint32_t> unmatched_predictions;
};

/// Matches records by frame_id. Duplicate ids in either set are a
/// ConfigError; an empty intersection is a DomainError.
EvaluationResult evaluate_records(const std::vector<PoseRecord>& predictions,
                                  const std::vector<PoseRecord>& ground_truth, const ModelPoints& model);

EvaluationResult evaluate_files(const std::filesystem::path& predictions, const std::filesystem::path& ground_truth,
                                const std::filesystem::path& model_meta);

/// Writes <out>.txt (table), <out>.csv and <out>.frames.jsonl.
void write_evaluation(const EvaluationResult& result, const std::filesystem::path& out_stem,
                      const std::string& title = "EgoPose");

}  // namespace egopose
