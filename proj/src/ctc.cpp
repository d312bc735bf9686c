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

#include "r2crnn/ctc.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "r2crnn/errors.h"

namespace r2crnn {

double log_sum_exp(double a, double b) {
  if (a <= kLogZero) return b;
  if (b <= kLogZero) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

std::size_t count_repeats(std::span<const std::size_t> label) {
  std::size_t r = 0;
  for (std::size_t i = 1; i < label.size(); ++i) r += label[i] == label[i - 1];
  return r;
}

std::size_t min_frames(std::span<const std::size_t> label) {
  return label.size() + count_repeats(label);
}

std::vector<std::size_t> extended_label(std::span<const std::size_t> label, std::size_t blank) {
  std::vector<std::size_t> ext(2 * label.size() + 1, blank);
  for (std::size_t i = 0; i < label.size(); ++i) ext[2 * i + 1] = label[i];
  return ext;
}

template <typename T>
CtcResult ctc_loss(const Tensor<T>& log_probs, std::span<const std::size_t> label,
                   std::size_t blank) {
  if (log_probs.rank() != 2) {
    throw ShapeError("ctc_loss: lattice must be [T,K], got " + shape_str(log_probs.shape()));
  }
  const std::size_t frames = log_probs.dim(0), classes = log_probs.dim(1);
  if (blank >= classes) throw ShapeError("ctc_loss: blank id outside the lattice classes");
  for (std::size_t l : label) {
    if (l >= classes || l == blank) {
      throw DataError("ctc_loss: label id " + std::to_string(l) + " is blank or out of range");
    }
  }
  if (frames < min_frames(label)) {
    throw NumericError("label too long for lattice: " + std::to_string(label.size()) +
                       " labels need " + std::to_string(min_frames(label)) + " frames, have " +
                       std::to_string(frames));
  }

  const std::vector<std::size_t> ext = extended_label(label, blank);
  const std::size_t states = ext.size();
  auto lp = [&](std::size_t t, std::size_t k) {
    const double v = static_cast<double>(log_probs[t * classes + k]);
    return std::isfinite(v) ? std::max(v, kLogZero) : kLogZero;
  };
  // s may be entered from s-2 when it holds a label differing from s-2.
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
  };

  // alpha includes the emission at t; beta covers frames after t only.
  std::vector<double> alpha(frames * states, kLogZero);
  std::vector<double> beta(frames * states, kLogZero);
  alpha[0] = lp(0, ext[0]);
  if (states > 1) alpha[1] = lp(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double a = alpha[(t - 1) * states + s];
      if (s >= 1) a = log_sum_exp(a, alpha[(t - 1) * states + s - 1]);
      if (can_skip(s)) a = log_sum_exp(a, alpha[(t - 1) * states + s - 2]);
      alpha[t * states + s] = a <= kLogZero ? kLogZero : a + lp(t, ext[s]);
    }
  }
  const std::size_t last = frames - 1;
  beta[last * states + states - 1] = 0.0;
  if (states > 1) beta[last * states + states - 2] = 0.0;
  for (std::size_t t = last; t-- > 0;) {
    for (std::size_t s = 0; s < states; ++s) {
      // Successor states of s are s, s+1 and s+2 (when s+2 may skip).
      double b = beta[(t + 1) * states + s] + lp(t + 1, ext[s]);
      if (s + 1 < states) {
        b = log_sum_exp(b, beta[(t + 1) * states + s + 1] + lp(t + 1, ext[s + 1]));
      }
      if (s + 2 < states && can_skip(s + 2)) {
        b = log_sum_exp(b, beta[(t + 1) * states + s + 2] + lp(t + 1, ext[s + 2]));
      }
      beta[t * states + s] = b <= kLogZero ? kLogZero : b;
    }
  }

  double log_p = alpha[last * states + states - 1];
  if (states > 1) log_p = log_sum_exp(log_p, alpha[last * states + states - 2]);
  if (!std::isfinite(log_p) || log_p <= kLogZero) {
    throw NumericError("ctc_loss: label has zero probability under the lattice");
  }

  CtcResult result;
  result.loss = -log_p;
  result.gradient = Tensor<double>({frames, classes});
  std::vector<double> occupancy(classes);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kLogZero);
    for (std::size_t s = 0; s < states; ++s) {
      const double a = alpha[t * states + s];
      const double b = beta[t * states + s];
      if (a <= kLogZero || b <= kLogZero) continue;
      occupancy[ext[s]] = log_sum_exp(occupancy[ext[s]], a + b);
    }
    for (std::size_t k = 0; k < classes; ++k) {
      const double o = occupancy[k];
      result.gradient[t * classes + k] = o <= kLogZero ? 0.0 : -std::exp(o - log_p);
    }
  }
  return result;
}

template <typename T>
Var ctc_loss(Graph<T>& g, Var log_probs, const LabelSequence& label, std::size_t blank) {
  CtcResult r = ctc_loss(g.value(log_probs), label, blank);
  if (!std::isfinite(r.loss)) throw NumericError("ctc_loss: non-finite loss");
  return g.record(OpKind::kCtcLoss, Tensor<T>::scalar(static_cast<T>(r.loss)), {log_probs},
                  [grad = std::move(r.gradient), log_probs](Graph<T>& g, Var self) {
    const double dy = static_cast<double>(g.grad(self)[0]);
    Tensor<T>& d = g.accumulator(log_probs);
    for (std::size_t i = 0; i < d.numel(); ++i) d[i] += static_cast<T>(dy * grad[i]);
  });
}

LabelSequence collapse_path(std::span<const std::size_t> path, std::size_t blank) {
  LabelSequence out;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (t > 0 && path[t] == path[t - 1]) continue;
    if (path[t] == blank) continue;
    out.push_back(path[t]);
  }
  return out;
}

double brute_force_likelihood(const Tensor<double>& log_probs,
                              std::span<const std::size_t> label, std::size_t blank) {
  if (log_probs.rank() != 2) {
    throw ShapeError("brute_force_likelihood: lattice must be [T,K]");
  }
  const std::size_t frames = log_probs.dim(0), classes = log_probs.dim(1);
  double paths = std::pow(static_cast<double>(classes), static_cast<double>(frames));
  if (paths > 1e7) {
    throw NumericError("brute_force_likelihood: " + std::to_string(classes) + "^" +
                       std::to_string(frames) + " paths exceed the 1e7 enumeration limit");
  }
  const LabelSequence target(label.begin(), label.end());
  std::vector<std::size_t> path(frames, 0);
  double total = 0.0;
  for (;;) {
    if (collapse_path(path, blank) == target) {
      double lp = 0.0;
      for (std::size_t t = 0; t < frames; ++t) lp += log_probs[t * classes + path[t]];
      total += std::exp(lp);
    }
    std::size_t t = frames;
    while (t-- > 0) {
      if (++path[t] < classes) break;
      path[t] = 0;
    }
    if (t == static_cast<std::size_t>(-1)) break;
  }
  return total;
}

template <typename T>
std::vector<std::size_t> best_path(const Tensor<T>& log_probs) {
  const std::size_t frames = log_probs.dim(0), classes = log_probs.dim(1);
  std::vector<std::size_t> path(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const T* row = log_probs.data() + t * classes;
    path[t] = static_cast<std::size_t>(std::max_element(row, row + classes) - row);
  }
  return path;
}

template <typename T>
LabelSequence greedy_decode(const ProbLattice<T>& lattice) {
  return collapse_path(best_path(lattice.log_probs), lattice.blank());
}

template CtcResult ctc_loss<float>(const Tensor<float>&, std::span<const std::size_t>,
                                   std::size_t);
template CtcResult ctc_loss<double>(const Tensor<double>&, std::span<const std::size_t>,
                                    std::size_t);
template Var ctc_loss<float>(Graph<float>&, Var, const LabelSequence&, std::size_t);
template Var ctc_loss<double>(Graph<double>&, Var, const LabelSequence&, std::size_t);
template std::vector<std::size_t> best_path<float>(const Tensor<float>&);
template std::vector<std::size_t> best_path<double>(const Tensor<double>&);
template LabelSequence greedy_decode<float>(const ProbLattice<float>&);
template LabelSequence greedy_decode<double>(const ProbLattice<double>&);

}  // namespace r2crnn
