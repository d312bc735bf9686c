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

#include <chrono>

#include "r2crnn/grad_check.h"
#include "r2crnn/r2_block.h"
#include "test_util.h"

namespace r2crnn {
namespace {

using testing::random_tensor;

// Makes BN an identity in eval mode: stats mean 0, var 1, one update.
template <typename T>
void neutral_stats(ParamRegistry<T>& reg) {
  for (auto& e : reg.entries()) {
    const std::string& n = e.name;
    if (n.ends_with("running_mean")) e.value.fill(T(0));
    if (n.ends_with("running_var")) e.value.fill(T(1));
    if (n.ends_with("updates")) e.value.fill(T(1));
  }
}

TEST(Rcl, ZeroWeightsGiveZero) {
  ParamRegistry<double> reg;
  GlorotInit init(1);
  add_rcl_params(reg, "rcl", 3, init);
  reg.at("rcl/conv/weight").fill(0.0);
  neutral_stats(reg);
  Graph<double> g;
  const Var out = rcl_forward(g, g.input(random_tensor({2, 3, 5, 5}, 2)),
                              RclParams<double>::bind(reg, "rcl", 2), Mode::kEval);
  for (double v : g.value(out).values()) EXPECT_EQ(v, 0.0);
}

TEST(Rcl, IdentityKernelAccumulatesInput) {
  // With an identity kernel and neutral BN: h0 = 1, h1 = 1 + h0, h2 = 1 + h1.
  ParamRegistry<double> reg;
  GlorotInit init(1);
  add_rcl_params(reg, "rcl", 2, init, 3);
  Tensor<double>& w = reg.at("rcl/conv/weight");
  w.fill(0.0);
  for (std::size_t c = 0; c < 2; ++c) w[((c * 2 + c) * 3 + 1) * 3 + 1] = 1.0;
  neutral_stats(reg);
  Graph<double> g;
  const Var out = rcl_forward(g, g.input(Tensor<double>({1, 2, 4, 4}, 1.0)),
                              RclParams<double>::bind(reg, "rcl", 2), Mode::kEval);
  for (double v : g.value(out).values()) EXPECT_NEAR(v, 3.0, 1e-4);
}

TEST(Rcl, ParameterCountIndependentOfStatisticSets) {
  ParamRegistry<float> shared, per_step;
  GlorotInit a(1), b(1);
  add_rcl_params(shared, "rcl", 8, a, 1);
  add_rcl_params(per_step, "rcl", 8, b, 3);
  EXPECT_EQ(shared.trainable_scalars(), 9u * 8 * 8 + 8 + 2 * 8);
  EXPECT_EQ(per_step.trainable_scalars(), shared.trainable_scalars());
  for (int t = 0; t < 3; ++t) {
    EXPECT_TRUE(per_step.contains("rcl/bn/step" + std::to_string(t) + "/running_mean"));
  }
  EXPECT_FALSE(per_step.contains("rcl/bn/running_mean"));
}

TEST(Rcl, NoUnrollIsConvBatchNormRelu) {
  ParamRegistry<double> reg;
  GlorotInit init(4);
  add_rcl_params(reg, "rcl", 3, init);
  const Tensor<double> x = random_tensor({2, 3, 4, 6}, 5);
  Graph<double> g;
  const Var rcl = rcl_forward(g, g.input(x), RclParams<double>::bind(reg, "rcl", 0), Mode::kTrain);
  ParamRegistry<double> fresh;
  GlorotInit init2(4);
  add_rcl_params(fresh, "rcl", 3, init2);
  const RunningStats<double> stats{&fresh.at("rcl/bn/running_mean"),
                                   &fresh.at("rcl/bn/running_var"), &fresh.at("rcl/bn/updates")};
  const Var direct = relu(
      g, batch_norm(g,
                    conv2d(g, g.input(x), g.input(fresh.at("rcl/conv/weight")),
                           g.input(fresh.at("rcl/conv/bias")), {{1, 1}, {1, 1}}),
                    g.input(fresh.at("rcl/bn/gamma")), g.input(fresh.at("rcl/bn/beta")),
                    Mode::kTrain, stats));
  const auto& a = g.value(rcl);
  const auto& b = g.value(direct);
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Rcl, TrainingUpdatesEveryStepStatistics) {
  ParamRegistry<double> reg;
  GlorotInit init(1);
  add_rcl_params(reg, "rcl", 2, init, 3);
  Graph<double> g;
  rcl_forward(g, g.input(random_tensor({2, 2, 3, 3}, 7)), RclParams<double>::bind(reg, "rcl", 2),
              Mode::kTrain);
  for (int t = 0; t < 3; ++t) {
    const std::string bn = "rcl/bn/step" + std::to_string(t);
    EXPECT_EQ(reg.at(bn + "/updates")[0], 1.0);
  }
  EXPECT_NE(reg.at("rcl/bn/step0/running_mean"), reg.at("rcl/bn/step2/running_mean"));
}

TEST(Rcl, EvalUsesStatisticsOfEachStep) {
  ParamRegistry<double> reg;
  GlorotInit init(2);
  add_rcl_params(reg, "rcl", 2, init, 3);
  neutral_stats(reg);
  const Tensor<double> x = random_tensor({1, 2, 4, 4}, 3);
  auto run = [&] {
    Graph<double> g;
    return g.value(
        rcl_forward(g, g.input(x), RclParams<double>::bind(reg, "rcl", 2), Mode::kEval));
  };
  const Tensor<double> before = run();
  reg.at("rcl/bn/step2/running_mean").fill(0.5);
  EXPECT_NE(run(), before);
}

TEST(Rcl, GradientMatchesFiniteDifferencesThroughSharedWeights) {
  ParamRegistry<double> reg;
  GlorotInit init(8);
  add_rcl_params(reg, "rcl", 2, init);
  const auto report = grad_check(
      [&](Graph<double>& g, std::span<const Var> v) {
        g.bind_param(reg.at("rcl/conv/weight"), v[1]);
        g.bind_param(reg.at("rcl/conv/bias"), v[2]);
        g.bind_param(reg.at("rcl/bn/gamma"), v[3]);
        g.bind_param(reg.at("rcl/bn/beta"), v[4]);
        const Var out =
            rcl_forward(g, v[0], RclParams<double>::bind(reg, "rcl", 2), Mode::kTrain);
        return weighted_sum(g, out, random_tensor({2, 2, 3, 3}, 9));
      },
      {{"x", random_tensor({2, 2, 3, 3}, 10)},
       {"weight", reg.at("rcl/conv/weight")},
       {"bias", reg.at("rcl/conv/bias")},
       {"gamma", reg.at("rcl/bn/gamma")},
       {"beta", reg.at("rcl/bn/beta")}});
  EXPECT_LT(report.max_error(), 1e-3);
}

TEST(R2Block, ReferenceShapeHalvesBothAxes) {
  ParamRegistry<float> reg;
  GlorotInit init(1);
  add_r2_block_params(reg, "b", 1, 32, init);
  neutral_stats(reg);
  Graph<float> g;
  const Var out = r2_block_forward(g, g.input(Tensor<float>({1, 1, 128, 1600}, 0.5f)),
                                   R2BlockParams<float>::bind(reg, "b", 2), Mode::kEval);
  EXPECT_EQ(g.value(out).shape(), (Shape{1, 32, 64, 800}));
}

TEST(R2Block, OddExtentsAreFloored) {
  ParamRegistry<double> reg;
  GlorotInit init(1);
  add_r2_block_params(reg, "b", 2, 3, init);
  for (auto [h, w] : {std::pair{4, 6}, {5, 7}, {2, 2}}) {
    Graph<double> g;
    const Var out = r2_block_forward(
        g, g.input(random_tensor({2, 2, std::size_t(h), std::size_t(w)}, 3)),
        R2BlockParams<double>::bind(reg, "b", 2), Mode::kTrain);
    EXPECT_EQ(g.value(out).shape(), (Shape{2, 3, std::size_t(h / 2), std::size_t(w / 2)}));
  }
}

TEST(R2Block, SilencedRecurrentPathLeavesPooledMapping) {
  ParamRegistry<double> reg;
  GlorotInit init(5);
  add_r2_block_params(reg, "b", 2, 3, init);
  for (const char* u : {"b/rcl1", "b/rcl2"}) reg.at(std::string(u) + "/bn/gamma").fill(0.0);
  const Tensor<double> x = random_tensor({2, 2, 4, 6}, 6);
  Graph<double> g;
  const Var out =
      r2_block_forward(g, g.input(x), R2BlockParams<double>::bind(reg, "b", 2), Mode::kTrain);
  const Var expected = maxpool2d(g, conv2d(g, g.input(x), g.input(reg.at("b/reduce/weight")),
                                           g.input(reg.at("b/reduce/bias"))));
  EXPECT_EQ(g.value(out), g.value(expected));
}

TEST(R2Block, ResidualPathCarriesGradientToInput) {
  ParamRegistry<double> reg;
  GlorotInit init(5);
  add_r2_block_params(reg, "b", 2, 3, init);
  // Recurrent units produce zero, so the input gradient flows only
  // through the identity skip.
  for (const char* u : {"b/rcl1", "b/rcl2"}) reg.at(std::string(u) + "/bn/gamma").fill(0.0);
  Graph<double> g;
  const Var x = g.input(random_tensor({1, 2, 4, 4}, 11), true);
  const Var out =
      r2_block_forward(g, x, R2BlockParams<double>::bind(reg, "b", 2), Mode::kTrain);
  g.backward(sum(g, out));
  double norm = 0;
  for (double v : g.grad(x).values()) norm += v * v;
  EXPECT_GT(norm, 0.0);
}

TEST(R2Block, GradientMatchesFiniteDifferences) {
  ParamRegistry<double> reg;
  GlorotInit init(12);
  add_r2_block_params(reg, "b", 1, 2, init, 3);
  const auto report = grad_check(
      [&](Graph<double>& g, std::span<const Var> v) {
        g.bind_param(reg.at("b/reduce/weight"), v[1]);
        g.bind_param(reg.at("b/rcl1/conv/weight"), v[2]);
        g.bind_param(reg.at("b/rcl2/conv/weight"), v[3]);
        const Var out =
            r2_block_forward(g, v[0], R2BlockParams<double>::bind(reg, "b", 2), Mode::kTrain);
        return weighted_sum(g, out, random_tensor({2, 2, 2, 2}, 13));
      },
      {{"x", random_tensor({2, 1, 4, 4}, 14)},
       {"reduce", reg.at("b/reduce/weight")},
       {"rcl1", reg.at("b/rcl1/conv/weight")},
       {"rcl2", reg.at("b/rcl2/conv/weight")}});
  EXPECT_LT(report.max_error(), 1e-3);
}

}  // namespace
}  // namespace r2crnn
