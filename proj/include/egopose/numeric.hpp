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

#include <Eigen/Core>

#include "egopose/errors.hpp"

namespace egopose {

/// Central-difference gradient of a scalar function of a vector.
template <typename Function>
Eigen::VectorXd finite_diff_gradient(Function&& f, const Eigen::VectorXd& x, double eps = 1e-6) {
  if (!(eps > 0.0)) throw DomainError("finite_diff_gradient: step must be positive");
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + eps;
    const double up = f(probe);
    probe(i) = x(i) - eps;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace egopose
