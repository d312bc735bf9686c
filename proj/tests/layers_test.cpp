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

#include <gtest/gtest.h>

#include <cmath>

#include "r2crnn/errors.h"
#include "r2crnn/grad_check.h"
#include "r2crnn/layers.h"
#include "test_util.h"

namespace r2crnn {
namespace {

using testing::random_tensor;

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Registry with one LSTM direction under `prefix`, random weights.
void add_random_lstm(ParamRegistry<double>& reg, const std::string& prefix, std::size_t n,
                     std::size_t h, std::uint64_t seed) {
  reg.add(prefix + "/input_weights", random_tensor({4 * h, n}, seed));
  reg.add(prefix + "/recurrent_weights", random_tensor({4 * h, h}, seed + 1));
  reg.add(prefix + "/bias", random_tensor({4 * h}, seed + 2));
}

Tensor<double> run_lstm(ParamRegistry<double>& reg, const std::string& prefix,
                        const Tensor<double>& seq, Direction dir) {
  Graph<double> g;
  return g.value(lstm_forward(g, g.input(seq), LstmParams<double>::bind(reg, prefix), dir));
}

TEST(Lstm, ZeroInputZeroParamsGiveZero) {
  ParamRegistry<double> reg;
  reg.add("l/input_weights", Tensor<double>({8, 3}));
  reg.add("l/recurrent_weights", Tensor<double>({8, 2}));
  reg.add("l/bias", Tensor<double>({8}));
  const Tensor<double> out = run_lstm(reg, "l", Tensor<double>({4, 2, 3}), Direction::kForward);
  EXPECT_EQ(out.shape(), (Shape{4, 2, 2}));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, SingleStepMatchesHandComputedCell) {
  // H = 1, N = 1, gate rows (input, forget, cell, output).
  const double w[4] = {0.3, -0.2, 0.8, 0.5};
  const double b[4] = {0.1, 1.0, -0.3, 0.2};
  const double x = 0.7;
  ParamRegistry<double> reg;
  reg.add("l/input_weights", Tensor<double>({4, 1}, std::vector<double>(w, w + 4)));
  reg.add("l/recurrent_weights", Tensor<double>({4, 1}, std::vector<double>{0.9, 0.9, 0.9, 0.9}));
  reg.add("l/bias", Tensor<double>({4}, std::vector<double>(b, b + 4)));
  const Tensor<double> out =
      run_lstm(reg, "l", Tensor<double>({1, 1, 1}, x), Direction::kForward);
  const double i = sigmoid_ref(w[0] * x + b[0]);
  const double g = std::tanh(w[2] * x + b[2]);
  const double o = sigmoid_ref(w[3] * x + b[3]);
  const double c = i * g;  // previous cell state is zero
  EXPECT_NEAR(out[0], o * std::tanh(c), 1e-14);
}

TEST(Lstm, TwoStepsMatchHandRecurrence) {
  ParamRegistry<double> reg;
  add_random_lstm(reg, "l", 1, 1, 5);
  const Tensor<double> seq({2, 1, 1}, std::vector<double>{0.4, -0.6});
  const Tensor<double> out = run_lstm(reg, "l", seq, Direction::kForward);
  const auto& W = reg.at("l/input_weights");
  const auto& U = reg.at("l/recurrent_weights");
  const auto& B = reg.at("l/bias");
  double h = 0, c = 0;
  for (int t = 0; t < 2; ++t) {
    double z[4];
    for (int k = 0; k < 4; ++k) z[k] = W[k] * seq[t] + U[k] * h + B[k];
    c = sigmoid_ref(z[1]) * c + sigmoid_ref(z[0]) * std::tanh(z[2]);
    h = sigmoid_ref(z[3]) * std::tanh(c);
    EXPECT_NEAR(out[t], h, 1e-14);
  }
}

TEST(Lstm, BackwardDirectionIsReversedForward) {
  ParamRegistry<double> reg;
  add_random_lstm(reg, "l", 3, 2, 9);
  const Tensor<double> seq = random_tensor({4, 1, 3}, 10);
  Tensor<double> rev(seq.shape());
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 3; ++k) rev[t * 3 + k] = seq[(3 - t) * 3 + k];
  const Tensor<double> back = run_lstm(reg, "l", seq, Direction::kBackward);
  const Tensor<double> fwd_of_rev = run_lstm(reg, "l", rev, Direction::kForward);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 2; ++k)
      EXPECT_NEAR(back[t * 2 + k], fwd_of_rev[(3 - t) * 2 + k], 1e-14);
}

TEST(Lstm, InputWidthMismatchIsRejected) {
  ParamRegistry<double> reg;
  add_random_lstm(reg, "l", 3, 2, 1);
  EXPECT_THROW(run_lstm(reg, "l", Tensor<double>({2, 1, 4}), Direction::kForward), ShapeError);
}

TEST(Lstm, GradientMatchesFiniteDifferences) {
  ParamRegistry<double> reg;
  add_random_lstm(reg, "l", 2, 2, 20);
  const auto report = grad_check(
      [&](Graph<double>& g, std::span<const Var> v) {
        g.bind_param(reg.at("l/input_weights"), v[1]);
        g.bind_param(reg.at("l/recurrent_weights"), v[2]);
        g.bind_param(reg.at("l/bias"), v[3]);
        const Var out =
            lstm_forward(g, v[0], LstmParams<double>::bind(reg, "l"), Direction::kForward);
        return weighted_sum(g, out, random_tensor({3, 1, 2}, 25));
      },
      {{"seq", random_tensor({3, 1, 2}, 21)},
       {"input_weights", reg.at("l/input_weights")},
       {"recurrent_weights", reg.at("l/recurrent_weights")},
       {"bias", reg.at("l/bias")}});
  EXPECT_LT(report.max_error(), 1e-3);
}

TEST(BiLstm, ReferenceWidthConcatenatesDirections) {
  ParamRegistry<float> reg;
  GlorotInit init(1);
  add_lstm_params(reg, "f", 6, 256, init);
  add_lstm_params(reg, "b", 6, 256, init);
  Graph<float> g;
  const Var out = bilstm_forward(g, g.input(random_tensor<float>({3, 2, 6}, 2)),
                                 LstmParams<float>::bind(reg, "f"),
                                 LstmParams<float>::bind(reg, "b"));
  EXPECT_EQ(g.value(out).shape(), (Shape{3, 2, 512}));
}

TEST(BiLstm, ZeroInputAndParamsGiveZero) {
  ParamRegistry<double> reg;
  for (const char* p : {"f", "b"}) {
    reg.add(std::string(p) + "/input_weights", Tensor<double>({8, 3}));
    reg.add(std::string(p) + "/recurrent_weights", Tensor<double>({8, 2}));
    reg.add(std::string(p) + "/bias", Tensor<double>({8}));
  }
  Graph<double> g;
  const Var out = bilstm_forward(g, g.input(Tensor<double>({3, 1, 3})),
                                 LstmParams<double>::bind(reg, "f"),
                                 LstmParams<double>::bind(reg, "b"));
  for (double v : g.value(out).values()) EXPECT_EQ(v, 0.0);
}

TEST(BiLstm, HiddenMismatchIsRejected) {
  ParamRegistry<double> reg;
  add_random_lstm(reg, "f", 3, 2, 1);
  add_random_lstm(reg, "b", 3, 3, 4);
  Graph<double> g;
  EXPECT_THROW(bilstm_forward(g, g.input(Tensor<double>({2, 1, 3})),
                              LstmParams<double>::bind(reg, "f"),
                              LstmParams<double>::bind(reg, "b")),
               ShapeError);
}

TEST(BiLstm, TimeReversalSwapsDirections) {
  ParamRegistry<double> reg;
  add_random_lstm(reg, "f", 3, 2, 30);
  add_random_lstm(reg, "b", 3, 2, 40);
  const Tensor<double> seq = random_tensor({5, 1, 3}, 50);
  Tensor<double> rev(seq.shape());
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t k = 0; k < 3; ++k) rev[t * 3 + k] = seq[(4 - t) * 3 + k];
  Graph<double> g;
  const auto f = LstmParams<double>::bind(reg, "f");
  const auto b = LstmParams<double>::bind(reg, "b");
  const Tensor<double> a = g.value(bilstm_forward(g, g.input(seq), f, b));
  const Tensor<double> r = g.value(bilstm_forward(g, g.input(rev), b, f));
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_NEAR(a[t * 4 + k], r[(4 - t) * 4 + 2 + k], 1e-14);
      EXPECT_NEAR(a[t * 4 + 2 + k], r[(4 - t) * 4 + k], 1e-14);
    }
}

TEST(BiLstm, PaddedFramesDoNotLeakIntoTrueFrames) {
  ParamRegistry<double> reg;
  add_random_lstm(reg, "f", 3, 2, 60);
  add_random_lstm(reg, "b", 3, 2, 70);
  const auto f = LstmParams<double>::bind(reg, "f");
  const auto b = LstmParams<double>::bind(reg, "b");
  const Tensor<double> seq = random_tensor({3, 1, 3}, 80);
  Graph<double> g;
  const Tensor<double> alone = g.value(bilstm_forward(g, g.input(seq), f, b));
  for (std::size_t pad : {1, 4}) {
    Tensor<double> padded = random_tensor({3 + pad, 1, 3}, 90 + pad, 5.0);
    std::copy_n(seq.data(), seq.numel(), padded.data());
    const std::size_t lengths[] = {3};
    const Tensor<double> out = g.value(bilstm_forward(g, g.input(padded), f, b, lengths));
    for (std::size_t i = 0; i < alone.numel(); ++i) EXPECT_NEAR(out[i], alone[i], 1e-13);
  }
}

TEST(InitParams, DeterministicUnderSeed) {
  ArchConfig arch;
  arch.block_channels = {2, 4};
  arch.input_height = 16;
  arch.lstm_hidden = 3;
  arch.num_classes = 5;
  const auto a = init_params<float>(arch, 3);
  const auto b = init_params<float>(arch, 3);
  const auto c = init_params<float>(arch, 4);
  ASSERT_EQ(a.size(), b.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.entries()[i].name, b.entries()[i].name);
    EXPECT_EQ(a.entries()[i].value, b.entries()[i].value);
    any_diff = any_diff || !(a.entries()[i].value == c.entries()[i].value);
  }
  EXPECT_TRUE(any_diff);
}

TEST(InitParams, ForgetBiasIsOneOthersZero) {
  ArchConfig arch;
  arch.block_channels = {2};
  arch.input_height = 16;
  arch.lstm_hidden = 3;
  arch.num_classes = 4;
  const auto reg = init_params<double>(arch, 1);
  const auto& bias = reg.at("lstm0/fwd/bias");
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(bias[i], (i >= 3 && i < 6) ? 1.0 : 0.0);
  for (double v : reg.at("block0/reduce/bias").values()) EXPECT_EQ(v, 0.0);
  for (double v : reg.at("output/bias").values()) EXPECT_EQ(v, 0.0);
}

TEST(InitParams, GlorotSpreadMatchesTheory) {
  GlorotInit init(123);
  const Tensor<double> w = init.sample<double>({100, 100}, 100, 100);
  double s = 0, s2 = 0;
  for (double v : w.values()) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(w.numel());
  const double stdev = std::sqrt(s2 / n - (s / n) * (s / n));
  const double bound = std::sqrt(6.0 / 200.0);
  EXPECT_NEAR(stdev, bound / std::sqrt(3.0), 0.1 * bound / std::sqrt(3.0));
  for (double v : w.values()) EXPECT_LE(std::abs(v), bound);
}

TEST(ParamRegistry, UniqueNamesAndStableOrder) {
  ParamRegistry<float> reg;
  reg.add("b", Tensor<float>({2}));
  reg.add("a", Tensor<float>({3}), ParamKind::kBuffer);
  EXPECT_THROW(reg.add("b", Tensor<float>({1})), Error);
  EXPECT_EQ(reg.entries()[0].name, "b");
  EXPECT_EQ(reg.entries()[1].name, "a");
  EXPECT_EQ(reg.trainable_scalars(), 2u);
  EXPECT_THROW(reg.at("missing"), Error);
}

}  // namespace
}  // namespace r2crnn
