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

#include "r2crnn/graph.h"
#include "r2crnn/tensor.h"

namespace r2crnn {

// Class ids in [0, V); never contains the blank.
using LabelSequence = std::vector<std::size_t>;

// Per-frame log-probabilities, frames x (V + 1). The blank is the last
// class.
template <typename T>
struct ProbLattice {
  std::size_t frames = 0;
  Tensor<T> log_probs;

  std::size_t num_classes() const { return log_probs.dim(1); }
  std::size_t blank() const { return num_classes() - 1; }
};

// Underflow stand-in for log(0); never -inf in arithmetic.
inline constexpr double kLogZero = -1e30;

double log_sum_exp(double a, double b);

// Number of adjacent equal labels; each needs a separating blank frame.
std::size_t count_repeats(std::span<const std::size_t> label);
// Minimum frame count that can emit `label`: L + repeats.
std::size_t min_frames(std::span<const std::size_t> label);

// b, l1, b, l2, ..., lL, b
std::vector<std::size_t> extended_label(std::span<const std::size_t> label, std::size_t blank);

struct CtcResult {
  double loss = 0.0;         // -log P(label | lattice)
  Tensor<double> gradient;   // d loss / d log_probs, same shape as the lattice
};

// Log-space forward-backward. Throws NumericError when the lattice has
// too few frames for the label.
template <typename T>
CtcResult ctc_loss(const Tensor<T>& log_probs, std::span<const std::size_t> label,
                   std::size_t blank);

// Graph node: scalar loss of a [T,K] log-prob node.
template <typename T>
Var ctc_loss(Graph<T>& g, Var log_probs, const LabelSequence& label, std::size_t blank);

// Merge adjacent repeats, then drop blanks.
LabelSequence collapse_path(std::span<const std::size_t> path, std::size_t blank);

// Sum of exp(path log-prob) over every frame path that collapses to
// `label`. Test oracle; refuses lattices with more than 1e7 paths.
double brute_force_likelihood(const Tensor<double>& log_probs,
                              std::span<const std::size_t> label, std::size_t blank);

// Per-frame argmax; ties go to the lowest class id.
template <typename T>
std::vector<std::size_t> best_path(const Tensor<T>& log_probs);

// Best path collapsed: a frame equal to its predecessor is dropped,
// blanks are dropped, the rest is emitted in order.
template <typename T>
LabelSequence greedy_decode(const ProbLattice<T>& lattice);

}  // namespace r2crnn
