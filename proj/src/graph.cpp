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

#include "r2crnn/graph.h"

#include <string>

#include "r2crnn/errors.h"

namespace r2crnn {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kMaxPool2d: return "maxpool2d";
    case OpKind::kBatchNorm: return "batch_norm";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kAffine: return "affine";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kSum: return "sum";
    case OpKind::kWeightedSum: return "weighted_sum";
    case OpKind::kSlice: return "slice";
    case OpKind::kConcat: return "concat";
    case OpKind::kSelect: return "select";
    case OpKind::kStack: return "stack";
    case OpKind::kReshape: return "reshape";
    case OpKind::kPermute: return "permute";
    case OpKind::kReverseWithin: return "reverse_within";
    case OpKind::kMaskFrames: return "mask_frames";
    case OpKind::kSelectSample: return "select_sample";
    case OpKind::kCtcLoss: return "ctc_loss";
  }
  return "unknown";
}

template <typename T>
typename Graph<T>::Node& Graph<T>::node(Var v) {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw Error("graph: invalid node id " + std::to_string(v.id));
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw Error("graph: invalid node id " + std::to_string(v.id));
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename T>
Var Graph<T>::input(Tensor<T> value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var Graph<T>::param(const Tensor<T>& tensor) {
  if (auto it = params_.find(&tensor); it != params_.end()) return it->second;
  Var v = input(tensor, true);
  params_.emplace(&tensor, v);
  return v;
}

template <typename T>
void Graph<T>::bind_param(const Tensor<T>& tensor, Var v) {
  node(v);
  if (!params_.emplace(&tensor, v).second) {
    throw Error("bind_param: tensor already has a graph node");
  }
}

template <typename T>
Var Graph<T>::find_param(const Tensor<T>& tensor) const {
  auto it = params_.find(&tensor);
  return it == params_.end() ? Var{} : it->second;
}

template <typename T>
Var Graph<T>::record(OpKind kind, Tensor<T> value, std::vector<Var> inputs,
                     BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || node(in).requires_grad;
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Graph<T>::value(Var v) const {
  return node(v).value;
}

template <typename T>
bool Graph<T>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <typename T>
OpKind Graph<T>::kind(Var v) const {
  return node(v).kind;
}

template <typename T>
const std::vector<Var>& Graph<T>::inputs(Var v) const {
  return node(v).inputs;
}

template <typename T>
Tensor<T>& Graph<T>::accumulator(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Var v) {
  return accumulator(v);
}

template <typename T>
void Graph<T>::backward(Var root) {
  Node& r = node(root);
  if (r.value.numel() != 1) {
    throw ShapeError("backward: root must be a scalar, got shape " +
                     shape_str(r.value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor<T>();
  accumulator(root).fill(T(1));
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, Var{id});
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace r2crnn
