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

#include "r2crnn/layers.h"

#include <cmath>
#include <random>
#include <vector>

#include "r2crnn/errors.h"
#include "r2crnn/r2_block.h"

namespace r2crnn {

template <typename T>
Tensor<T>& ParamRegistry<T>::add(std::string name, Tensor<T> value, ParamKind kind) {
  if (index_.count(name)) throw Error("param registry: duplicate name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(value), kind});
  return entries_.back().value;
}

template <typename T>
Tensor<T>& ParamRegistry<T>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("param registry: no parameter named '" + name + "'");
  return entries_[it->second].value;
}

template <typename T>
const Tensor<T>& ParamRegistry<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("param registry: no parameter named '" + name + "'");
  return entries_[it->second].value;
}

template <typename T>
std::size_t ParamRegistry<T>::trainable_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.kind == ParamKind::kTrainable) n += e.value.numel();
  }
  return n;
}

template class ParamRegistry<float>;
template class ParamRegistry<double>;

// ------------------------------------------------------------------ init

GlorotInit::GlorotInit(std::uint64_t seed) : gen_(seed) {}

// std::mt19937_64 is fully specified; the distribution step is done by
// hand so the stream is identical across standard libraries.
double GlorotInit::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

template <typename T>
Tensor<T> GlorotInit::sample(Shape shape, std::size_t fan_in, std::size_t fan_out) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> t(std::move(shape));
  for (T& v : t.storage()) v = static_cast<T>((2.0 * uniform() - 1.0) * a);
  return t;
}

template Tensor<float> GlorotInit::sample<float>(Shape, std::size_t, std::size_t);
template Tensor<double> GlorotInit::sample<double>(Shape, std::size_t, std::size_t);

template <typename T>
void add_lstm_params(ParamRegistry<T>& reg, const std::string& prefix, std::size_t inputs,
                     std::size_t hidden, GlorotInit& init) {
  const std::size_t h4 = 4 * hidden;
  reg.add(prefix + "/input_weights", init.sample<T>({h4, inputs}, inputs, h4));
  reg.add(prefix + "/recurrent_weights", init.sample<T>({h4, hidden}, hidden, h4));
  Tensor<T> bias({h4});
  for (std::size_t i = hidden; i < 2 * hidden; ++i) bias[i] = T(1);
  reg.add(prefix + "/bias", std::move(bias));
}

template <typename T>
ParamRegistry<T> init_params(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  GlorotInit init(seed);
  ParamRegistry<T> reg;
  std::size_t in = 1;
  for (std::size_t b = 0; b < arch.block_channels.size(); ++b) {
    add_r2_block_params(reg, "block" + std::to_string(b), in, arch.block_channels[b], init,
                        arch.bn_step_statistics ? arch.rcl_unroll + 1 : 1);
    in = arch.block_channels[b];
  }
  std::size_t n = arch.sequence_features();
  for (std::size_t l = 0; l < arch.lstm_layers; ++l) {
    const std::string prefix = "lstm" + std::to_string(l);
    add_lstm_params(reg, prefix + "/fwd", n, arch.lstm_hidden, init);
    add_lstm_params(reg, prefix + "/bwd", n, arch.lstm_hidden, init);
    n = 2 * arch.lstm_hidden;
  }
  reg.add("output/weight", init.sample<T>({arch.num_classes, n}, n, arch.num_classes));
  reg.add("output/bias", Tensor<T>({arch.num_classes}));
  return reg;
}

template ParamRegistry<float> init_params<float>(const ArchConfig&, std::uint64_t);
template ParamRegistry<double> init_params<double>(const ArchConfig&, std::uint64_t);

// ------------------------------------------------------------------ lstm

template <typename T>
LstmParams<T> LstmParams<T>::bind(ParamRegistry<T>& reg, const std::string& prefix) {
  LstmParams p;
  p.input_weights = &reg.at(prefix + "/input_weights");
  p.recurrent_weights = &reg.at(prefix + "/recurrent_weights");
  p.bias = &reg.at(prefix + "/bias");
  p.hidden = p.recurrent_weights->dim(1);
  return p;
}

template struct LstmParams<float>;
template struct LstmParams<double>;

namespace {

template <typename T>
Var lstm_scan(Graph<T>& g, Var seq, const LstmParams<T>& params) {
  const Shape s = g.value(seq).shape();
  const std::size_t frames = s[0], batch = s[1], n = s[2], h = params.hidden;
  const Var wi = g.param(*params.input_weights);
  const Var wh = g.param(*params.recurrent_weights);
  const Var bias = g.param(*params.bias);

  // Input projections for all frames at once.
  Var proj = affine(g, reshape(g, seq, {frames * batch, n}), wi, bias);
  proj = reshape(g, proj, {frames, batch, 4 * h});

  std::vector<Var> outputs;
  outputs.reserve(frames);
  Var hidden, cell;
  for (std::size_t t = 0; t < frames; ++t) {
    Var gates = select(g, proj, t);
    if (t > 0) gates = add(g, gates, affine(g, hidden, wh, Var{}));
    const Var in_gate = sigmoid(g, slice_last(g, gates, 0, h));
    const Var candidate = tanh(g, slice_last(g, gates, 2 * h, 3 * h));
    const Var out_gate = sigmoid(g, slice_last(g, gates, 3 * h, 4 * h));
    if (t == 0) {
      cell = mul(g, in_gate, candidate);
    } else {
      const Var forget = sigmoid(g, slice_last(g, gates, h, 2 * h));
      cell = add(g, mul(g, forget, cell), mul(g, in_gate, candidate));
    }
    hidden = mul(g, out_gate, tanh(g, cell));
    outputs.push_back(hidden);
  }
  return stack<T>(g, outputs);
}

}  // namespace

template <typename T>
Var lstm_forward(Graph<T>& g, Var seq, const LstmParams<T>& params, Direction direction,
                 std::span<const std::size_t> lengths) {
  const Shape s = g.value(seq).shape();
  if (s.size() != 3) throw ShapeError("lstm: sequence must be [T,B,N], got " + shape_str(s));
  const Tensor<T>& wi = *params.input_weights;
  if (wi.rank() != 2 || wi.dim(1) != s[2]) {
    throw ShapeError("lstm: input dim 2 is " + std::to_string(s[2]) +
                     " but input weights expect " + std::to_string(wi.dim(1)));
  }
  if (wi.dim(0) != 4 * params.hidden || params.recurrent_weights->dim(0) != 4 * params.hidden ||
      params.bias->numel() != 4 * params.hidden) {
    throw ShapeError("lstm: parameter shapes inconsistent with hidden size " +
                     std::to_string(params.hidden));
  }
  if (direction == Direction::kForward) return lstm_scan(g, seq, params);
  std::vector<std::size_t> lens(lengths.begin(), lengths.end());
  if (lens.empty()) lens.assign(s[1], s[0]);
  const Var reversed = reverse_within<T>(g, seq, lens);
  return reverse_within<T>(g, lstm_scan(g, reversed, params), lens);
}

template <typename T>
Var bilstm_forward(Graph<T>& g, Var seq, const LstmParams<T>& fwd, const LstmParams<T>& bwd,
                   std::span<const std::size_t> lengths) {
  if (fwd.hidden != bwd.hidden) {
    throw ShapeError("bilstm: hidden sizes differ (" + std::to_string(fwd.hidden) + " vs " +
                     std::to_string(bwd.hidden) + ")");
  }
  const Var parts[] = {lstm_forward(g, seq, fwd, Direction::kForward, lengths),
                       lstm_forward(g, seq, bwd, Direction::kBackward, lengths)};
  return concat_last<T>(g, parts);
}

#define R2CRNN_INSTANTIATE_LSTM(T)                                                         \
  template void add_lstm_params<T>(ParamRegistry<T>&, const std::string&, std::size_t,     \
                                   std::size_t, GlorotInit&);                              \
  template Var lstm_forward<T>(Graph<T>&, Var, const LstmParams<T>&, Direction,            \
                               std::span<const std::size_t>);                              \
  template Var bilstm_forward<T>(Graph<T>&, Var, const LstmParams<T>&, const LstmParams<T>&, \
                                 std::span<const std::size_t>);

R2CRNN_INSTANTIATE_LSTM(float)
R2CRNN_INSTANTIATE_LSTM(double)

}  // namespace r2crnn
