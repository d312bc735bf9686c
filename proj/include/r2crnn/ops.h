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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "r2crnn/graph.h"
#include "r2crnn/tensor.h"

namespace r2crnn {

using Pair = std::array<std::size_t, 2>;

enum class Mode { kTrain, kEval };

struct Conv2dOptions {
  Pair stride{1, 1};
  Pair padding{0, 0};
};

// Running statistics for batch_norm. The tensors are owned elsewhere
// (normally by a ParamRegistry); `updates` is a one-element counter and a
// zero count marks the statistics as uninitialised.
template <typename T>
struct RunningStats {
  Tensor<T>* mean = nullptr;
  Tensor<T>* var = nullptr;
  Tensor<T>* updates = nullptr;
};

struct BatchNormOptions {
  double eps = 1e-5;
  // running = momentum * running + (1 - momentum) * batch
  double momentum = 0.9;
};

// Cross-correlation. x [B,Cin,H,W], weight [Cout,Cin,kh,kw], bias [Cout].
template <typename T>
Var conv2d(Graph<T>& g, Var x, Var weight, Var bias, Conv2dOptions opts = {});

// Max over windows; ties resolve to the first cell in row-major order.
template <typename T>
Var maxpool2d(Graph<T>& g, Var x, Pair window = {2, 2}, Pair stride = {2, 2});

// Per-channel normalisation of x [B,C,H,W]. Train mode uses batch
// statistics and updates `stats`; eval mode reads `stats`.
template <typename T>
Var batch_norm(Graph<T>& g, Var x, Var gamma, Var beta, Mode mode,
               RunningStats<T> stats, BatchNormOptions opts = {});

template <typename T>
Var relu(Graph<T>& g, Var x);
template <typename T>
Var sigmoid(Graph<T>& g, Var x);
template <typename T>
Var tanh(Graph<T>& g, Var x);

// x [B,N] * weight[M,N]^T + bias[M] -> [B,M]. Pass an invalid Var as
// bias for a plain product.
template <typename T>
Var affine(Graph<T>& g, Var x, Var weight, Var bias);

// Along the last axis.
template <typename T>
Var log_softmax(Graph<T>& g, Var x);

// Elementwise; shapes must match exactly.
template <typename T>
Var add(Graph<T>& g, Var a, Var b);
template <typename T>
Var mul(Graph<T>& g, Var a, Var b);
template <typename T>
Var scale(Graph<T>& g, Var a, T factor);

// Reductions to a scalar [1].
template <typename T>
Var sum(Graph<T>& g, Var a);
template <typename T>
Var weighted_sum(Graph<T>& g, Var a, const Tensor<T>& weights);

// Columns [begin, end) of the last axis.
template <typename T>
Var slice_last(Graph<T>& g, Var x, std::size_t begin, std::size_t end);
// Concatenation along the last axis; leading dims must agree.
template <typename T>
Var concat_last(Graph<T>& g, std::span<const Var> parts);

// x[index] along axis 0 (drops the axis).
template <typename T>
Var select(Graph<T>& g, Var x, std::size_t index);
// Stacks equally-shaped tensors along a new axis 0.
template <typename T>
Var stack(Graph<T>& g, std::span<const Var> parts);

template <typename T>
Var reshape(Graph<T>& g, Var x, Shape shape);
// out.shape[i] = x.shape[axes[i]].
template <typename T>
Var permute(Graph<T>& g, Var x, std::span<const std::size_t> axes);

// Sequence ops on [T,B,N]. reverse_within reverses frames [0, len_b) of
// every sample b and leaves pad frames in place; mask_frames zeroes
// frames t >= len_b; select_sample returns [len,N] for one sample.
template <typename T>
Var reverse_within(Graph<T>& g, Var x, std::span<const std::size_t> lengths);
template <typename T>
Var mask_frames(Graph<T>& g, Var x, std::span<const std::size_t> lengths);
template <typename T>
Var select_sample(Graph<T>& g, Var x, std::size_t sample, std::size_t length);

}  // namespace r2crnn
