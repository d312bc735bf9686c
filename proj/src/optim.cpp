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

#include "r2crnn/optim.h"

#include <cmath>

#include "r2crnn/errors.h"

namespace r2crnn {

AdamState AdamState::for_params(const ParamRegistry<float>& params, AdamOptions options) {
  AdamState s;
  s.options = options;
  for (const auto& e : params.entries()) {
    if (e.kind != ParamKind::kTrainable) continue;
    s.slots.push_back({e.name, Tensor<float>(e.value.shape()), Tensor<float>(e.value.shape())});
  }
  return s;
}

bool AdamState::operator==(const AdamState& o) const {
  if (step != o.step || slots.size() != o.slots.size() || options.lr != o.options.lr ||
      options.beta1 != o.options.beta1 || options.beta2 != o.options.beta2 ||
      options.eps != o.options.eps) {
    return false;
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].name != o.slots[i].name || !(slots[i].first == o.slots[i].first) ||
        !(slots[i].second == o.slots[i].second)) {
      return false;
    }
  }
  return true;
}

template <typename T>
std::vector<Tensor<T>> collect_gradients(Graph<T>& g, const ParamRegistry<T>& params) {
  std::vector<Tensor<T>> grads;
  for (const auto& e : params.entries()) {
    if (e.kind != ParamKind::kTrainable) continue;
    const Var v = g.find_param(e.value);
    grads.push_back(v.valid() && g.requires_grad(v) ? g.grad(v) : Tensor<T>(e.value.shape()));
  }
  return grads;
}

double clip_grad_norm(std::vector<Tensor<float>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& gr : grads) {
    for (float v : gr.values()) sq += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const float factor = static_cast<float>(max_norm / norm);
    for (auto& gr : grads) {
      for (float& v : gr.storage()) v *= factor;
    }
  }
  return norm;
}

void adam_step(ParamRegistry<float>& params, const std::vector<Tensor<float>>& grads,
               AdamState& state) {
  if (grads.size() != state.slots.size()) {
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(state.slots.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const AdamSlot& slot = state.slots[i];
    if (grads[i].shape() != slot.first.shape() ||
        params.at(slot.name).shape() != slot.first.shape()) {
      throw ShapeError("adam_step: shape mismatch for " + slot.name);
    }
    for (float v : grads[i].values()) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in parameter " + slot.name);
    }
  }

  const AdamOptions& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const float b1 = static_cast<float>(o.beta1), b2 = static_cast<float>(o.beta2);
  const float correct1 = static_cast<float>(1.0 - std::pow(o.beta1, t));
  const float correct2 = static_cast<float>(1.0 - std::pow(o.beta2, t));
  const float lr = static_cast<float>(o.lr), eps = static_cast<float>(o.eps);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    AdamSlot& slot = state.slots[i];
    Tensor<float>& p = params.at(slot.name);
    const float* gr = grads[i].data();
    float* m = slot.first.data();
    float* v = slot.second.data();
    float* w = p.data();
    for (std::size_t j = 0; j < p.numel(); ++j) {
      m[j] = b1 * m[j] + (1.0f - b1) * gr[j];
      v[j] = b2 * v[j] + (1.0f - b2) * gr[j] * gr[j];
      const float mhat = m[j] / correct1;
      const float vhat = v[j] / correct2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template std::vector<Tensor<float>> collect_gradients<float>(Graph<float>&,
                                                             const ParamRegistry<float>&);
template std::vector<Tensor<double>> collect_gradients<double>(Graph<double>&,
                                                               const ParamRegistry<double>&);

}  // namespace r2crnn
