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
#include <deque>
#include <functional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "r2crnn/tensor.h"

namespace r2crnn {

enum class OpKind {
  kLeaf,
  kConv2d,
  kMaxPool2d,
  kBatchNorm,
  kRelu,
  kSigmoid,
  kTanh,
  kAffine,
  kLogSoftmax,
  kAdd,
  kMul,
  kScale,
  kSum,
  kWeightedSum,
  kSlice,
  kConcat,
  kSelect,
  kStack,
  kReshape,
  kPermute,
  kReverseWithin,
  kMaskFrames,
  kSelectSample,
  kCtcLoss,
};

std::string_view op_name(OpKind kind);

// Handle to one node of a Graph; the node id is its position in the
// graph's record list.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
  bool operator==(const Var&) const = default;
};

// Tape of operation records for reverse-mode differentiation.
//
// Records are appended in execution order, so inputs always precede the
// node that consumes them. Values are immutable once recorded; gradient
// slots are allocated lazily and live beside the values.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var out)>;

  // Leaf holding a copy of `value`.
  Var input(Tensor<T> value, bool requires_grad = false);

  // Leaf for a model parameter. Repeated calls with the same tensor
  // object return the same node, so shared weights accumulate one
  // gradient.
  Var param(const Tensor<T>& tensor);
  // Makes later param(tensor) calls return `v`. Lets a caller route a
  // registry tensor through a leaf it created itself.
  void bind_param(const Tensor<T>& tensor, Var v);
  // Node previously created by param(), or an invalid Var.
  Var find_param(const Tensor<T>& tensor) const;

  // Appends an operation record. `backward` reads grad(out) and adds
  // into accumulator() of the inputs that require gradients.
  Var record(OpKind kind, Tensor<T> value, std::vector<Var> inputs,
             BackwardFn backward);

  const Tensor<T>& value(Var v) const;
  bool requires_grad(Var v) const;
  OpKind kind(Var v) const;
  const std::vector<Var>& inputs(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the last backward() root with respect to `v`; zeros when
  // `v` was not reached.
  const Tensor<T>& grad(Var v);
  // Mutable gradient slot, zero-initialised on first access.
  Tensor<T>& accumulator(Var v);

  // Reverse accumulation from a scalar root. Every record before the
  // root is visited once, in reverse order.
  void backward(Var root);

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    Tensor<T> value;
    Tensor<T> grad;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Node> nodes_;  // stable references across push_back
  std::unordered_map<const Tensor<T>*, Var> params_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace r2crnn

template <>
struct std::hash<r2crnn::Var> {
  std::size_t operator()(const r2crnn::Var& v) const noexcept {
    return std::hash<int>()(v.id);
  }
};
