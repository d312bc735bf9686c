// Copyright 2026 The R2-CRNN Authors. All Rights Reserved.
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

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "r2crnn/graph.h"
#include "r2crnn/tensor.h"

namespace r2crnn {

struct NamedTensor {
  std::string name;
  Tensor<double> value;
};

// Builds a scalar-valued graph from leaves created for each input.
using GraphBuilder = std::function<Var(Graph<double>&, std::span<const Var>)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so that near-zero gradients
  // are compared in absolute terms.
  double floor = 1e-6;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  double max_error() const;
  bool passed() const { return max_error() < tolerance; }
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

// Compares reverse-mode gradients with central differences
// (f(x+h) - f(x-h)) / 2h on every coordinate of every input.
GradCheckReport grad_check(const GraphBuilder& fn, std::vector<NamedTensor> inputs,
                           GradCheckOptions opts = {});

}  // namespace r2crnn
