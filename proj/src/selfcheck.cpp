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

#include "r2crnn/selfcheck.h"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "r2crnn/ctc.h"
#include "r2crnn/grad_check.h"
#include "r2crnn/layers.h"
#include "r2crnn/ops.h"
#include "r2crnn/r2_block.h"

namespace r2crnn {

namespace {

using G = Graph<double>;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  Tensor<double> tensor(Shape shape, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    for (double& v : t.storage()) v = uniform(-scale, scale);
    return t;
  }

 private:
  std::mt19937_64 gen_;
};

// Random projection to a scalar; unlike a plain sum it does not cancel
// the gradients of normalising ops.
Var project(G& g, Var out, std::uint64_t seed) {
  Rng rng(seed);
  return weighted_sum(g, out, rng.tensor(g.value(out).shape()));
}

CheckResult run(const std::string& name, double tolerance, const GraphBuilder& fn,
                std::vector<NamedTensor> inputs) {
  GradCheckOptions opts;
  opts.tolerance = tolerance;
  const GradCheckReport report = grad_check(fn, std::move(inputs), opts);
  CheckResult r{name, report.max_error(), tolerance, {}};
  for (const auto& e : report.entries) {
    if (e.max_rel_error == r.error) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "worst at %s[%zu]: analytic %.9g numeric %.9g",
                    e.name.c_str(), e.worst_index, e.analytic, e.numeric);
      r.detail = buf;
      break;
    }
  }
  return r;
}

// Inputs for every trainable registry entry, bound to the registry
// tensors inside the graph.
std::vector<NamedTensor> registry_inputs(const ParamRegistry<double>& reg) {
  std::vector<NamedTensor> out;
  for (const auto& e : reg.entries()) {
    if (e.kind == ParamKind::kTrainable) out.push_back({e.name, e.value});
  }
  return out;
}

void bind_registry(G& g, const ParamRegistry<double>& reg, std::span<const Var> leaves,
                   std::size_t first) {
  for (const auto& e : reg.entries()) {
    if (e.kind == ParamKind::kTrainable) g.bind_param(e.value, leaves[first++]);
  }
}

}  // namespace

std::vector<CheckResult> gradient_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;

  out.push_back(run(
      "conv2d 3x3 pad 1", 1e-4,
      [&](G& g, std::span<const Var> v) {
        return project(g, conv2d(g, v[0], v[1], v[2], {{1, 1}, {1, 1}}), seed);
      },
      {{"x", rng.tensor({2, 3, 5, 6})}, {"weight", rng.tensor({4, 3, 3, 3})},
       {"bias", rng.tensor({4})}}));

  out.push_back(run(
      "conv2d 3x2 stride 2", 1e-4,
      [&](G& g, std::span<const Var> v) {
        return project(g, conv2d(g, v[0], v[1], v[2], {{2, 2}, {0, 0}}), seed);
      },
      {{"x", rng.tensor({1, 2, 7, 6})}, {"weight", rng.tensor({3, 2, 3, 2})},
       {"bias", rng.tensor({3})}}));

  out.push_back(run(
      "conv2d 1x1", 1e-4,
      [&](G& g, std::span<const Var> v) {
        return project(g, conv2d(g, v[0], v[1], v[2]), seed);
      },
      {{"x", rng.tensor({2, 3, 4, 4})}, {"weight", rng.tensor({5, 3, 1, 1})},
       {"bias", rng.tensor({5})}}));

  out.push_back(run(
      "maxpool2d", 1e-4,
      [&](G& g, std::span<const Var> v) { return project(g, maxpool2d(g, v[0]), seed); },
      {{"x", rng.tensor({2, 3, 6, 5})}}));

  {
    Tensor<double> mean({3}), var({3}, 1.0), updates({1});
    out.push_back(run(
        "batch_norm", 1e-3,
        [&](G& g, std::span<const Var> v) {
          return project(g,
                         batch_norm(g, v[0], v[1], v[2], Mode::kTrain,
                                    {&mean, &var, &updates}),
                         seed);
        },
        {{"x", rng.tensor({4, 3, 3, 2}, 2.0)}, {"gamma", rng.tensor({3})},
         {"beta", rng.tensor({3})}}));
  }

  {
    // Keep inputs away from the kink at zero.
    Tensor<double> x = rng.tensor({3, 7});
    for (double& e : x.storage()) e = e < 0 ? e - 0.05 : e + 0.05;
    out.push_back(run(
        "relu", 1e-6,
        [&](G& g, std::span<const Var> v) { return project(g, relu(g, v[0]), seed); },
        {{"x", x}}));
  }

  out.push_back(run(
      "affine", 1e-5,
      [&](G& g, std::span<const Var> v) { return project(g, affine(g, v[0], v[1], v[2]), seed); },
      {{"x", rng.tensor({3, 5})}, {"weight", rng.tensor({4, 5})}, {"bias", rng.tensor({4})}}));

  out.push_back(run(
      "log_softmax", 1e-5,
      [&](G& g, std::span<const Var> v) { return project(g, log_softmax(g, v[0]), seed); },
      {{"x", rng.tensor({3, 6}, 3.0)}}));

  {
    ParamRegistry<double> reg;
    GlorotInit init(seed);
    add_lstm_params(reg, "fwd", 4, 3, init);
    add_lstm_params(reg, "bwd", 4, 3, init);
    std::vector<NamedTensor> inputs{{"seq", rng.tensor({3, 2, 4})}};
    for (auto& p : registry_inputs(reg)) inputs.push_back(std::move(p));
    out.push_back(run(
        "lstm (T=3, both directions)", 1e-3,
        [&](G& g, std::span<const Var> v) {
          bind_registry(g, reg, v, 1);
          const std::size_t lengths[] = {3, 2};
          const auto fwd = LstmParams<double>::bind(reg, "fwd");
          const auto bwd = LstmParams<double>::bind(reg, "bwd");
          return project(g, bilstm_forward(g, v[0], fwd, bwd, lengths), seed);
        },
        std::move(inputs)));
  }

  {
    ParamRegistry<double> reg;
    GlorotInit init(seed + 1);
    add_rcl_params(reg, "rcl", 3, init, 3);
    for (auto& e : reg.entries()) {
      if (e.name == "rcl/conv/bias" || e.name == "rcl/bn/beta") e.value = rng.tensor({3}, 0.5);
    }
    std::vector<NamedTensor> inputs{{"x", rng.tensor({2, 3, 5, 5})}};
    for (auto& p : registry_inputs(reg)) inputs.push_back(std::move(p));
    out.push_back(run(
        "rcl unit", 1e-3,
        [&](G& g, std::span<const Var> v) {
          bind_registry(g, reg, v, 1);
          return project(g, rcl_forward(g, v[0], RclParams<double>::bind(reg, "rcl", 2),
                                        Mode::kTrain),
                         seed);
        },
        std::move(inputs)));
  }

  {
    ParamRegistry<double> reg;
    GlorotInit init(seed + 2);
    add_r2_block_params(reg, "block", 2, 3, init, 3);
    std::vector<NamedTensor> inputs{{"x", rng.tensor({1, 2, 8, 8})}};
    for (auto& p : registry_inputs(reg)) inputs.push_back(std::move(p));
    out.push_back(run(
        "r2 block 1x2x8x8", 1e-3,
        [&](G& g, std::span<const Var> v) {
          bind_registry(g, reg, v, 1);
          return project(g,
                         r2_block_forward(g, v[0], R2BlockParams<double>::bind(reg, "block", 2),
                                          Mode::kTrain),
                         seed);
        },
        std::move(inputs)));
  }

  {
    const LabelSequence label{0, 1, 1};
    out.push_back(run(
        "ctc loss", 1e-4,
        [&, label](G& g, std::span<const Var> v) {
          return ctc_loss(g, log_softmax(g, v[0]), label, 3);
        },
        {{"logits", rng.tensor({6, 4}, 2.0)}}));
  }
  return out;
}

namespace {

Tensor<double> random_lattice(Rng& rng, std::size_t frames, std::size_t classes) {
  Tensor<double> lp({frames, classes});
  for (std::size_t t = 0; t < frames; ++t) {
    double norm = kLogZero;
    for (std::size_t k = 0; k < classes; ++k) {
      lp[t * classes + k] = rng.uniform(-3.0, 3.0);
      norm = log_sum_exp(norm, lp[t * classes + k]);
    }
    for (std::size_t k = 0; k < classes; ++k) lp[t * classes + k] -= norm;
  }
  return lp;
}

// Calls fn on every label over `vocab` classes with length <= max_len.
void for_each_label(std::size_t vocab, std::size_t max_len,
                    const std::function<void(const LabelSequence&)>& fn) {
  LabelSequence label;
  std::function<void()> rec = [&] {
    fn(label);
    if (label.size() == max_len) return;
    for (std::size_t k = 0; k < vocab; ++k) {
      label.push_back(k);
      rec();
      label.pop_back();
    }
  };
  rec();
}

}  // namespace

std::vector<CheckResult> ctc_suite(std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst_loss = 0.0, worst_total = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t frames = 1 + rng.below(6);
    const std::size_t vocab = 1 + rng.below(4);
    LabelSequence label;
    do {
      label.assign(rng.below(4), 0);
      for (auto& l : label) l = rng.below(vocab);
    } while (min_frames(label) > frames);
    const Tensor<double> lp = random_lattice(rng, frames, vocab + 1);

    const double loss = ctc_loss(lp, label, vocab).loss;
    const double brute = -std::log(brute_force_likelihood(lp, label, vocab));
    worst_loss = std::max(worst_loss, std::abs(loss - brute));

    double total = 0.0;
    for_each_label(vocab, frames, [&](const LabelSequence& l) {
      if (min_frames(l) <= frames) total += std::exp(-ctc_loss(lp, l, vocab).loss);
    });
    worst_total = std::max(worst_total, std::abs(total - 1.0));
  }
  const std::string n = std::to_string(instances) + " instances";
  return {{"ctc vs path enumeration", worst_loss, 1e-6, n},
          {"ctc total probability", worst_total, 1e-9, n}};
}

std::string format_check(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s  %-30s %.3e %s %.0e", r.passed() ? "PASS" : "FAIL",
                r.name.c_str(), r.error, r.passed() ? "<" : ">=", r.tolerance);
  std::string out = buf;
  if (!r.passed() && !r.detail.empty()) out += "  (" + r.detail + ")";
  return out;
}

}  // namespace r2crnn
