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

#include <cstdint>
#include <string>
#include <vector>

#include "r2crnn/graph.h"
#include "r2crnn/layers.h"
#include "r2crnn/tensor.h"

namespace r2crnn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamSlot {
  std::string name;
  Tensor<float> first;   // running mean of gradients
  Tensor<float> second;  // running mean of squared gradients
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<AdamSlot> slots;  // one per trainable parameter, registry order

  // Zero moments for every trainable entry of `params`.
  static AdamState for_params(const ParamRegistry<float>& params, AdamOptions options = {});

  bool operator==(const AdamState& o) const;
};

// Gradient of every trainable parameter, registry order. Parameters the
// graph never touched get zeros.
template <typename T>
std::vector<Tensor<T>> collect_gradients(Graph<T>& g, const ParamRegistry<T>& params);

// Scales `grads` in place so their joint L2 norm is at most `max_norm`;
// returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(std::vector<Tensor<float>>& grads, double max_norm);

// One bias-corrected Adam update. Throws NumericError naming the first
// parameter with a non-finite gradient; nothing is modified in that case.
void adam_step(ParamRegistry<float>& params, const std::vector<Tensor<float>>& grads,
               AdamState& state);

}  // namespace r2crnn
