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

#include "r2crnn/model.h"

#include <algorithm>
#include <string>

#include "r2crnn/errors.h"
#include "r2crnn/r2_block.h"

namespace r2crnn {

template <typename T>
Var map_to_sequence(Graph<T>& g, Var features) {
  const Shape s = g.value(features).shape();
  if (s.size() != 4) {
    throw ShapeError("map_to_sequence: features must be [B,C,H,W], got " + shape_str(s));
  }
  static constexpr std::size_t kAxes[] = {3, 0, 1, 2};
  const Var cols = permute<T>(g, features, kAxes);
  return reshape(g, cols, {s[3], s[0], s[1] * s[2]});
}

template <typename T>
Var sequence_to_map(Graph<T>& g, Var sequence, std::size_t channels) {
  const Shape s = g.value(sequence).shape();
  if (s.size() != 3 || channels == 0 || s[2] % channels != 0) {
    throw ShapeError("sequence_to_map: cannot split " + shape_str(s) + " into " +
                     std::to_string(channels) + " channels");
  }
  const Var cols = reshape(g, sequence, {s[0], s[1], channels, s[2] / channels});
  static constexpr std::size_t kAxes[] = {1, 2, 3, 0};
  return permute<T>(g, cols, kAxes);
}

template <typename T>
R2Crnn<T>::R2Crnn(ArchConfig arch, ParamRegistry<T>& params)
    : arch_(std::move(arch)), params_(&params) {
  arch_.validate();
}

template <typename T>
Var R2Crnn<T>::features(Graph<T>& g, Var images, Mode mode) {
  Var x = images;
  for (std::size_t b = 0; b < arch_.block_channels.size(); ++b) {
    const auto block =
        R2BlockParams<T>::bind(*params_, "block" + std::to_string(b), arch_.rcl_unroll);
    x = r2_block_forward(g, x, block, mode);
  }
  return x;
}

template <typename T>
Var R2Crnn<T>::sequence_head(Graph<T>& g, Var seq, std::span<const std::size_t> frames) {
  seq = mask_frames(g, seq, frames);
  for (std::size_t l = 0; l < arch_.lstm_layers; ++l) {
    const std::string prefix = "lstm" + std::to_string(l);
    const auto fwd = LstmParams<T>::bind(*params_, prefix + "/fwd");
    const auto bwd = LstmParams<T>::bind(*params_, prefix + "/bwd");
    seq = bilstm_forward(g, seq, fwd, bwd, frames);
  }
  const Shape s = g.value(seq).shape();
  Var flat = reshape(g, seq, {s[0] * s[1], s[2]});
  flat = affine(g, flat, g.param(params_->at("output/weight")),
                g.param(params_->at("output/bias")));
  flat = log_softmax(g, flat);
  return reshape(g, flat, {s[0], s[1], arch_.num_classes});
}

template <typename T>
std::vector<Var> R2Crnn<T>::forward(Graph<T>& g, Var images,
                                    std::span<const std::size_t> widths, Mode mode) {
  const Shape s = g.value(images).shape();
  if (s.size() != 4 || s[1] != 1) {
    throw ShapeError("model: images must be [B,1,H,W], got " + shape_str(s));
  }
  if (s[2] != arch_.input_height) {
    throw ShapeError("model: image height " + std::to_string(s[2]) + " at dim 2, expected " +
                     std::to_string(arch_.input_height));
  }
  if (widths.size() != s[0]) {
    throw ShapeError("model: " + std::to_string(widths.size()) + " widths for batch of " +
                     std::to_string(s[0]));
  }
  const std::size_t stride = arch_.frame_stride();
  std::vector<std::size_t> frames;
  for (std::size_t w : widths) {
    if (w > s[3]) {
      throw ShapeError("model: true width " + std::to_string(w) + " exceeds padded width " +
                       std::to_string(s[3]));
    }
    frames.push_back(count_frames(w, stride));
  }

  std::vector<Var> lattices;
  if (mode == Mode::kTrain) {
    const Var seq = map_to_sequence(g, features(g, images, mode));
    const Var log_probs = sequence_head(g, seq, frames);
    for (std::size_t b = 0; b < s[0]; ++b) {
      lattices.push_back(select_sample(g, log_probs, b, frames[b]));
    }
    return lattices;
  }

  const std::size_t height = s[2], padded = s[3];
  for (std::size_t b = 0; b < s[0]; ++b) {
    Tensor<T> crop({1, 1, height, widths[b]});
    // Re-fetched each pass: adding nodes may move graph storage.
    const T* src = g.value(images).data() + b * height * padded;
    for (std::size_t y = 0; y < height; ++y) {
      std::copy_n(src + y * padded, widths[b], crop.data() + y * widths[b]);
    }
    const Var seq = map_to_sequence(g, features(g, g.input(std::move(crop)), mode));
    const std::size_t one[] = {frames[b]};
    lattices.push_back(select_sample(g, sequence_head(g, seq, one), 0, frames[b]));
  }
  return lattices;
}

template <typename T>
ProbLattice<T> R2Crnn<T>::infer(const Tensor<T>& image) {
  const Shape& s = image.shape();
  const bool ok = (s.size() == 3 && s[0] == 1) || (s.size() == 4 && s[0] == 1 && s[1] == 1);
  if (!ok) throw ShapeError("infer: expected a [1,H,W] image, got " + shape_str(s));
  const std::size_t height = s[s.size() - 2], width = s.back();
  Graph<T> g;
  const Var x = g.input(image.reshaped({1, 1, height, width}));
  const std::size_t widths[] = {width};
  const Var out = forward(g, x, widths, Mode::kEval).front();
  ProbLattice<T> lattice;
  lattice.log_probs = g.value(out);
  lattice.frames = lattice.log_probs.dim(0);
  return lattice;
}

template Var map_to_sequence<float>(Graph<float>&, Var);
template Var map_to_sequence<double>(Graph<double>&, Var);
template Var sequence_to_map<float>(Graph<float>&, Var, std::size_t);
template Var sequence_to_map<double>(Graph<double>&, Var, std::size_t);
template class R2Crnn<float>;
template class R2Crnn<double>;

}  // namespace r2crnn
