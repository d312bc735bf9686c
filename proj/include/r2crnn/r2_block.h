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
#include <string>
#include <vector>

#include "r2crnn/graph.h"
#include "r2crnn/layers.h"
#include "r2crnn/ops.h"

namespace r2crnn {

// One recurrent convolutional unit. The same 3x3 convolution and batch
// norm parameters are applied at every unroll step:
//   h0 = relu(bn(conv(x0)))
//   ht = relu(bn(conv(x0 + h{t-1})))   t = 1..unroll_steps
// BN running statistics are either one set shared by all steps or one set
// per step (step t uses stats[t]).
template <typename T>
struct RclParams {
  const Tensor<T>* conv_weight = nullptr;  // [C,C,3,3]
  const Tensor<T>* conv_bias = nullptr;    // [C]
  const Tensor<T>* bn_gamma = nullptr;
  const Tensor<T>* bn_beta = nullptr;
  std::vector<RunningStats<T>> stats;  // 1 or unroll_steps + 1 sets
  std::size_t unroll_steps = 2;

  static RclParams bind(ParamRegistry<T>& reg, const std::string& prefix,
                        std::size_t unroll_steps);
};

// 1x1 channel mapping followed by exactly two RCL units.
template <typename T>
struct R2BlockParams {
  const Tensor<T>* reduce_weight = nullptr;  // [Cout,Cin,1,1]
  const Tensor<T>* reduce_bias = nullptr;    // [Cout]
  RclParams<T> rcl1;
  RclParams<T> rcl2;

  static R2BlockParams bind(ParamRegistry<T>& reg, const std::string& prefix,
                            std::size_t unroll_steps);
};

// Registers conv/bn parameters and `stat_sets` BN buffer sets under
// `prefix`: <prefix>/bn/running_* for one set, <prefix>/bn/step<t>/running_*
// otherwise.
template <typename T>
void add_rcl_params(ParamRegistry<T>& reg, const std::string& prefix, std::size_t channels,
                    GlorotInit& init, std::size_t stat_sets = 1);
template <typename T>
void add_r2_block_params(ParamRegistry<T>& reg, const std::string& prefix,
                         std::size_t in_channels, std::size_t out_channels, GlorotInit& init,
                         std::size_t stat_sets = 1);

template <typename T>
Var rcl_forward(Graph<T>& g, Var x0, const RclParams<T>& params, Mode mode);

// r = conv1x1(x); out = maxpool2x2(r + rcl2(rcl1(r)))
template <typename T>
Var r2_block_forward(Graph<T>& g, Var x, const R2BlockParams<T>& params, Mode mode);

}  // namespace r2crnn
