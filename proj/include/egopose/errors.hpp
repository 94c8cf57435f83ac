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

#pragma once

#include <stdexcept>
#include <string>

namespace egopose {

/// Argument outside the mathematical domain of an operation (t_z <= 0, empty set, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A value violates a type invariant (non-orthonormal rotation, ...).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Point at or behind the camera plane passed to a projection.
class BehindCameraError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Inconsistent sizes or layouts between related buffers.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Missing or malformed configuration / metadata.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground truth cannot be encoded onto the anchor grid.
class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed wire message.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Latency trace misuse (duplicate or out-of-order stage).
class InstrumentationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Inference backend failure (graph load, unsupported op, shape mismatch).
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Server unreachable after the configured retries.
class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace egopose
