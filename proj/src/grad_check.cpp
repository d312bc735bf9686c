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

#include "r2crnn/grad_check.h"

#include <algorithm>
#include <cmath>

#include "r2crnn/errors.h"

namespace r2crnn {

double GradCheckReport::max_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const GraphBuilder& fn, const std::vector<NamedTensor>& inputs) {
  Graph<double> g;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const auto& in : inputs) leaves.push_back(g.input(in.value, false));
  const Tensor<double>& out = g.value(fn(g, leaves));
  if (out.numel() != 1) {
    throw ShapeError("grad_check: function must return a scalar, got " +
                     shape_str(out.shape()));
  }
  return out[0];
}

}  // namespace

GradCheckReport grad_check(const GraphBuilder& fn, std::vector<NamedTensor> inputs,
                           GradCheckOptions opts) {
  if (!(opts.step > 0.0) || !std::isfinite(opts.step)) {
    throw NumericError("grad_check: step must be positive and finite");
  }

  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    std::vector<Var> leaves;
    for (const auto& in : inputs) leaves.push_back(g.input(in.value, true));
    Var root = fn(g, leaves);
    g.backward(root);
    for (Var v : leaves) analytic.push_back(g.grad(v));
  }

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    GradCheckEntry entry;
    entry.name = inputs[p].name;
    Tensor<double>& x = inputs[p].value;
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double saved = x[i];
      x[i] = saved + opts.step;
      const double up = evaluate(fn, inputs);
      x[i] = saved - opts.step;
      const double down = evaluate(fn, inputs);
      x[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = analytic[p][i];
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        throw NumericError("grad_check: non-finite value at " + entry.name + "[" +
                           std::to_string(i) + "]");
      }
      const double err = relative_error(a, numeric, opts.floor);
      if (err > entry.max_rel_error || i == 0) {
        entry.max_rel_error = std::max(entry.max_rel_error, err);
        entry.worst_index = i;
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace r2crnn
