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

#include "egopose/evaluate.hpp"

#include <fstream>
#include <map>

#include "egopose/errors.hpp"
#include "egopose/net.hpp"

namespace egopose {

namespace {

std::map<std::uint32_t, const PoseRecord*> index_by_id(const std::vector<PoseRecord>& records, const char* what) {
  std::map<std::uint32_t, const PoseRecord*> out;
  for (const auto& r : records)
    if (!out.emplace(r.frame_id, &r).second)
      throw ConfigError(std::string("duplicate frame_id ") + std::to_string(r.frame_id) + " in " + what);
  return out;
}

std::string id_list(const std::vector<std::uint32_t>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + std::to_string(ids[i]);
  if (ids.size() > 20) s += ", ... (" + std::to_string(ids.size()) + " total)";
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

EvaluationResult evaluate_records(const std::vector<PoseRecord>& predictions,
                                  const std::vector<PoseRecord>& ground_truth, const ModelPoints& model) {
  model.validate();
  if (!model.tip || !model.axis) throw ConfigError("model metadata needs a tip and an axis for drill metrics");
  const auto pred = index_by_id(predictions, "predictions");
  const auto gt = index_by_id(ground_truth, "ground truth");

  EvaluationResult r;
  for (const auto& [id, g] : gt) {
    auto it = pred.find(id);
    if (it == pred.end()) {
      r.missing_predictions.push_back(id);
      continue;
    }
    const PoseRecord& p = *it->second;
    r.frames.push_back(compute_frame_metrics(id, g->pose, p.pose, g->hand, p.hand, model));
  }
  for (const auto& [id, p] : pred)
    if (!gt.count(id)) r.unmatched_predictions.push_back(id);

  if (!r.missing_predictions.empty())
    log(LogLevel::Warn, "no prediction for frame ids " + id_list(r.missing_predictions) + "; excluded");
  if (!r.unmatched_predictions.empty())
    log(LogLevel::Warn, "no ground truth for frame ids " + id_list(r.unmatched_predictions) + "; excluded");
  if (r.frames.empty()) throw DomainError("predictions and ground truth share no frame ids");
  r.report = aggregate_metrics(r.frames);
  return r;
}

EvaluationResult evaluate_files(const std::filesystem::path& predictions, const std::filesystem::path& ground_truth,
                                const std::filesystem::path& model_meta) {
  return evaluate_records(read_pose_records(predictions), read_pose_records(ground_truth), load_model(model_meta));
}

void write_evaluation(const EvaluationResult& result, const std::filesystem::path& out_stem, const std::string& title) {
  if (out_stem.has_parent_path()) std::filesystem::create_directories(out_stem.parent_path());
  write_text(out_stem.string() + ".txt", format_metric_table(result.report, title));
  write_text(out_stem.string() + ".csv", format_metric_csv(result.report));
  std::string lines;
  for (const auto& f : result.frames) lines += frame_metrics_to_json(f).dump() + "\n";
  write_text(out_stem.string() + ".frames.jsonl", lines);
}

}  // namespace egopose
