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

#include "r2crnn/r2_block.h"

#include <algorithm>

#include "r2crnn/errors.h"

namespace r2crnn {

template <typename T>
RclParams<T> RclParams<T>::bind(ParamRegistry<T>& reg, const std::string& prefix,
                                std::size_t unroll_steps) {
  RclParams p;
  p.conv_weight = &reg.at(prefix + "/conv/weight");
  p.conv_bias = &reg.at(prefix + "/conv/bias");
  p.bn_gamma = &reg.at(prefix + "/bn/gamma");
  p.bn_beta = &reg.at(prefix + "/bn/beta");
  auto stats = [&reg](const std::string& bn) {
    return RunningStats<T>{&reg.at(bn + "/running_mean"), &reg.at(bn + "/running_var"),
                           &reg.at(bn + "/updates")};
  };
  if (reg.contains(prefix + "/bn/running_mean")) {
    p.stats.push_back(stats(prefix + "/bn"));
  } else {
    for (std::size_t t = 0; t <= unroll_steps; ++t) {
      p.stats.push_back(stats(prefix + "/bn/step" + std::to_string(t)));
    }
  }
  p.unroll_steps = unroll_steps;
  return p;
}

template <typename T>
R2BlockParams<T> R2BlockParams<T>::bind(ParamRegistry<T>& reg, const std::string& prefix,
                                        std::size_t unroll_steps) {
  R2BlockParams p;
  p.reduce_weight = &reg.at(prefix + "/reduce/weight");
  p.reduce_bias = &reg.at(prefix + "/reduce/bias");
  p.rcl1 = RclParams<T>::bind(reg, prefix + "/rcl1", unroll_steps);
  p.rcl2 = RclParams<T>::bind(reg, prefix + "/rcl2", unroll_steps);
  return p;
}

template <typename T>
void add_rcl_params(ParamRegistry<T>& reg, const std::string& prefix, std::size_t channels,
                    GlorotInit& init, std::size_t stat_sets) {
  const std::size_t c = channels;
  reg.add(prefix + "/conv/weight", init.sample<T>({c, c, 3, 3}, c * 9, c * 9));
  reg.add(prefix + "/conv/bias", Tensor<T>({c}));
  reg.add(prefix + "/bn/gamma", Tensor<T>({c}, T(1)));
  reg.add(prefix + "/bn/beta", Tensor<T>({c}));
  if (stat_sets == 0) throw ConfigError("rcl: at least one set of BN statistics required");
  for (std::size_t t = 0; t < stat_sets; ++t) {
    const std::string bn =
        stat_sets == 1 ? prefix + "/bn" : prefix + "/bn/step" + std::to_string(t);
    reg.add(bn + "/running_mean", Tensor<T>({c}), ParamKind::kBuffer);
    reg.add(bn + "/running_var", Tensor<T>({c}, T(1)), ParamKind::kBuffer);
    reg.add(bn + "/updates", Tensor<T>({1}), ParamKind::kBuffer);
  }
}

template <typename T>
void add_r2_block_params(ParamRegistry<T>& reg, const std::string& prefix,
                         std::size_t in_channels, std::size_t out_channels, GlorotInit& init,
                         std::size_t stat_sets) {
  reg.add(prefix + "/reduce/weight",
          init.sample<T>({out_channels, in_channels, 1, 1}, in_channels, out_channels));
  reg.add(prefix + "/reduce/bias", Tensor<T>({out_channels}));
  add_rcl_params(reg, prefix + "/rcl1", out_channels, init, stat_sets);
  add_rcl_params(reg, prefix + "/rcl2", out_channels, init, stat_sets);
}

template <typename T>
Var rcl_forward(Graph<T>& g, Var x0, const RclParams<T>& params, Mode mode) {
  const Tensor<T>& w = *params.conv_weight;
  const Shape& xs = g.value(x0).shape();
  if (w.rank() != 4 || w.dim(0) != w.dim(1)) {
    throw ShapeError("rcl: conv weight must map C -> C, got " + shape_str(w.shape()));
  }
  if (xs.size() != 4 || xs[1] != w.dim(0)) {
    throw ShapeError("rcl: input " + shape_str(xs) + " does not have " +
                     std::to_string(w.dim(0)) + " channels at dim 1");
  }
  const Var weight = g.param(w);
  const Var bias = g.param(*params.conv_bias);
  const Var gamma = g.param(*params.bn_gamma);
  const Var beta = g.param(*params.bn_beta);
  const Conv2dOptions same{{1, 1}, {w.dim(2) / 2, w.dim(3) / 2}};
  if (params.stats.empty()) throw ConfigError("rcl: no BN statistics bound");
  auto step = [&](Var in, std::size_t t) {
    Var y = conv2d(g, in, weight, bias, same);
    y = batch_norm(g, y, gamma, beta, mode, params.stats[std::min(t, params.stats.size() - 1)]);
    return relu(g, y);
  };
  Var h = step(x0, 0);
  for (std::size_t t = 1; t <= params.unroll_steps; ++t) h = step(add(g, x0, h), t);
  return h;
}

template <typename T>
Var r2_block_forward(Graph<T>& g, Var x, const R2BlockParams<T>& params, Mode mode) {
  const Var r = conv2d(g, x, g.param(*params.reduce_weight), g.param(*params.reduce_bias));
  const Var y = rcl_forward(g, rcl_forward(g, r, params.rcl1, mode), params.rcl2, mode);
  return maxpool2d(g, add(g, r, y));
}

#define R2CRNN_INSTANTIATE_R2(T)                                                          \
  template struct RclParams<T>;                                                           \
  template struct R2BlockParams<T>;                                                       \
  template void add_rcl_params<T>(ParamRegistry<T>&, const std::string&, std::size_t,     \
                                  GlorotInit&, std::size_t);                              \
  template void add_r2_block_params<T>(ParamRegistry<T>&, const std::string&, std::size_t, \
                                       std::size_t, GlorotInit&, std::size_t);            \
  template Var rcl_forward<T>(Graph<T>&, Var, const RclParams<T>&, Mode);                 \
  template Var r2_block_forward<T>(Graph<T>&, Var, const R2BlockParams<T>&, Mode);

R2CRNN_INSTANTIATE_R2(float)
R2CRNN_INSTANTIATE_R2(double)

}  // namespace r2crnn
