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
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string>
#include <unordered_map>

#include "r2crnn/arch.h"
#include "r2crnn/graph.h"
#include "r2crnn/ops.h"
#include "r2crnn/tensor.h"

namespace r2crnn {

enum class ParamKind : std::uint8_t {
  kTrainable,
  kBuffer,  // state that is not optimised, e.g. BN running statistics
};

// Ordered, uniquely named parameter store. Element addresses are stable
// for the registry's lifetime, so layers and graphs may hold pointers.
template <typename T>
class ParamRegistry {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    ParamKind kind = ParamKind::kTrainable;
  };

  Tensor<T>& add(std::string name, Tensor<T> value,
                 ParamKind kind = ParamKind::kTrainable);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;

  std::deque<Entry>& entries() { return entries_; }
  const std::deque<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Total number of trainable scalars.
  std::size_t trainable_scalars() const;

  template <typename U>
  ParamRegistry<U> cast() const {
    ParamRegistry<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>(), e.kind);
    return out;
  }

 private:
  std::deque<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gate blocks along the 4H axis are ordered (input, forget, cell, output).
template <typename T>
struct LstmParams {
  const Tensor<T>* input_weights = nullptr;      // [4H,N]
  const Tensor<T>* recurrent_weights = nullptr;  // [4H,H]
  const Tensor<T>* bias = nullptr;               // [4H]
  std::size_t hidden = 0;

  static LstmParams bind(ParamRegistry<T>& reg, const std::string& prefix);
};

enum class Direction { kForward, kBackward };


// seq [T,B,N] -> [T,B,H], zero initial state. With `lengths`, the
// backward direction runs over each sample's first lengths[b] frames only
// and pad frames never influence them.
template <typename T>
Var lstm_forward(Graph<T>& g, Var seq, const LstmParams<T>& params, Direction direction,
                 std::span<const std::size_t> lengths = {});

// [forward ; backward] along the feature axis -> [T,B,2H].
template <typename T>
Var bilstm_forward(Graph<T>& g, Var seq, const LstmParams<T>& fwd, const LstmParams<T>& bwd,
                   std::span<const std::size_t> lengths = {});

// Deterministic Glorot-uniform source: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
class GlorotInit {
 public:
  explicit GlorotInit(std::uint64_t seed);
  template <typename T>
  Tensor<T> sample(Shape shape, std::size_t fan_in, std::size_t fan_out);

 private:
  double uniform();  // [0, 1)
  std::mt19937_64 gen_;
};

// Glorot-uniform weights, zero bias with forget-gate bias 1.
template <typename T>
void add_lstm_params(ParamRegistry<T>& reg, const std::string& prefix, std::size_t inputs,
                     std::size_t hidden, GlorotInit& init);

// Full network parameter set for `arch`.
template <typename T>
ParamRegistry<T> init_params(const ArchConfig& arch, std::uint64_t seed);

extern template class ParamRegistry<float>;
extern template class ParamRegistry<double>;

}  // namespace r2crnn
