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
#include <span>
#include <vector>

#include "r2crnn/arch.h"
#include "r2crnn/ctc.h"
#include "r2crnn/graph.h"
#include "r2crnn/layers.h"
#include "r2crnn/ops.h"

namespace r2crnn {

// [B,C,H,W] -> [W,B,C*H]. Column w becomes frame w; its feature vector
// lists channel 0 rows top to bottom, then channel 1, and so on.
template <typename T>
Var map_to_sequence(Graph<T>& g, Var features);
// Inverse of map_to_sequence for a known channel count.
template <typename T>
Var sequence_to_map(Graph<T>& g, Var sequence, std::size_t channels);

// The full network: R2 blocks, map-to-sequence, stacked BiLSTMs and a
// per-frame affine + log-softmax classifier. Holds non-owning views into
// a ParamRegistry.
template <typename T>
class R2Crnn {
 public:
  R2Crnn(ArchConfig arch, ParamRegistry<T>& params);

  const ArchConfig& arch() const { return arch_; }
  ParamRegistry<T>& params() { return *params_; }

  // images [B,1,H,W] with per-sample true widths. Returns one [T_b, K]
  // log-prob node per sample, T_b = count_frames(widths[b]).
  //
  // Train mode runs the batch jointly (pad frames masked before the
  // recurrent layers). Eval mode crops every sample to its true width and
  // runs it alone, so results do not depend on padding or batch company.
  std::vector<Var> forward(Graph<T>& g, Var images, std::span<const std::size_t> widths,
                           Mode mode);

  // Eval-mode lattice of a single [1,H,W] or [1,1,H,W] image.
  ProbLattice<T> infer(const Tensor<T>& image);

 private:
  Var features(Graph<T>& g, Var images, Mode mode);
  Var sequence_head(Graph<T>& g, Var seq, std::span<const std::size_t> frames);

  ArchConfig arch_;
  ParamRegistry<T>* params_;
};

extern template class R2Crnn<float>;
extern template class R2Crnn<double>;

}  // namespace r2crnn
