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

// Minimal ONNX graph interpreter: enough operators to execute small
// contract-test graphs on the CPU, single-threaded and deterministic.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace egopose::onnx {

enum class DType { Float, Int64 };

struct Tensor {
  DType dtype = DType::Float;
  std::vector<std::int64_t> shape;
  std::vector<float> f;
  std::vector<std::int64_t> i;

  static Tensor floats(std::vector<std::int64_t> shape, std::vector<float> values);
  static Tensor int64s(std::vector<std::int64_t> shape, std::vector<std::int64_t> values);

  std::size_t numel() const;
  std::string shape_string() const;
};

std::size_t element_count(std::span<const std::int64_t> shape);
std::string shape_string(std::span<const std::int64_t> shape);

/// Declared graph input or output. Dynamic or unknown dimensions are -1.
struct ValueInfo {
  std::string name;
  std::vector<std::int64_t> shape;
};

class Graph {
 public:
  /// Throws BackendError when the file is missing, is not a ModelProto, or
  /// uses an operator this interpreter does not implement.
  static Graph load(const std::filesystem::path& path);
  static Graph parse(std::span<const std::uint8_t> bytes);

  Graph(Graph&&) noexcept;
  Graph& operator=(Graph&&) noexcept;
  ~Graph();

  /// Graph inputs that are not initializers.
  const std::vector<ValueInfo>& inputs() const;
  const std::vector<ValueInfo>& outputs() const;

  /// Runs the graph and returns every declared output by name.
  std::map<std::string, Tensor> run(const std::map<std::string, Tensor>& feeds) const;

  /// Operator types the interpreter executes.
  static const std::vector<std::string>& supported_ops();

 private:
  struct Impl;
  explicit Graph(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace egopose::onnx
