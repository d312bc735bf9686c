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
#include "r2crnn/ops.h"
#include "test_util.h"

namespace r2crnn {
namespace {

using testing::random_tensor;

// Straightforward nested-loop cross-correlation.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w,
                          const Tensor<double>& b, std::size_t stride, std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const std::size_t HO = (H + 2 * pad - KH) / stride + 1, WO = (W + 2 * pad - KW) / stride + 1;
  Tensor<double> out({B, O, HO, WO});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < HO; ++i)
        for (std::size_t j = 0; j < WO; ++j) {
          double acc = b[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < KH; ++p)
              for (std::size_t q = 0; q < KW; ++q) {
                const long y = static_cast<long>(i * stride + p) - static_cast<long>(pad);
                const long xx = static_cast<long>(j * stride + q) - static_cast<long>(pad);
                if (y < 0 || xx < 0 || y >= static_cast<long>(H) || xx >= static_cast<long>(W))
                  continue;
                acc += x[((n * C + c) * H + static_cast<std::size_t>(y)) * W +
                         static_cast<std::size_t>(xx)] *
                       w[((o * C + c) * KH + p) * KW + q];
              }
          out[((n * O + o) * HO + i) * WO + j] = acc;
        }
  return out;
}

Tensor<double> conv_value(const Tensor<double>& x, const Tensor<double>& w,
                          const Tensor<double>& b, Conv2dOptions opts) {
  Graph<double> g;
  return g.value(conv2d(g, g.input(x), g.input(w), g.input(b), opts));
}

TEST(Conv2d, OnesKernelCountsNeighbours) {
  const Tensor<double> out =
      conv_value(Tensor<double>({1, 1, 3, 3}, 1.0), Tensor<double>({1, 1, 3, 3}, 1.0),
                 Tensor<double>({1}), {{1, 1}, {1, 1}});
  ASSERT_EQ(out.shape(), (Shape{1, 1, 3, 3}));
  EXPECT_EQ(out[4], 9.0);
  EXPECT_EQ(out[0], 4.0);
  EXPECT_EQ(out[1], 6.0);
}

TEST(Conv2d, CentreKernelIsIdentity) {
  Tensor<double> w({1, 1, 3, 3});
  w[4] = 1.0;
  const Tensor<double> x = random_tensor({1, 1, 5, 4}, 1);
  EXPECT_EQ(conv_value(x, w, Tensor<double>({1}), {{1, 1}, {1, 1}}), x);
}

TEST(Conv2d, MatchesNestedLoops) {
  const Tensor<double> x = random_tensor({2, 3, 7, 6}, 2);
  const Tensor<double> w = random_tensor({4, 3, 3, 3}, 3);
  const Tensor<double> b = random_tensor({4}, 4);
  for (std::size_t stride : {1, 2}) {
    for (std::size_t pad : {0, 1}) {
      const Tensor<double> got = conv_value(x, w, b, {{stride, stride}, {pad, pad}});
      const Tensor<double> want = naive_conv(x, w, b, stride, pad);
      ASSERT_EQ(got.shape(), want.shape());
      for (std::size_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
  }
}

TEST(Conv2d, ChannelMismatchNamesDimension) {
  try {
    conv_value(Tensor<double>({1, 2, 4, 4}), Tensor<double>({1, 3, 3, 3}), Tensor<double>({1}),
               {});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("dim 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(conv_value(Tensor<double>({1, 1, 2, 2}), Tensor<double>({1, 1, 3, 3}),
                          Tensor<double>({1}), {}),
               ShapeError);
}

TEST(Conv2d, Deterministic) {
  const Tensor<float> x = random_tensor<float>({2, 3, 9, 9}, 5);
  const Tensor<float> w = random_tensor<float>({4, 3, 3, 3}, 6);
  auto run = [&] {
    Graph<float> g;
    return g.value(conv2d(g, g.input(x), g.input(w), g.input(Tensor<float>({4})),
                          {{1, 1}, {1, 1}}));
  };
  EXPECT_EQ(run(), run());
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
  const auto report = grad_check(
      [](Graph<double>& g, std::span<const Var> v) {
        return weighted_sum(g, conv2d(g, v[0], v[1], v[2], {{1, 1}, {1, 1}}),
                            random_tensor({2, 4, 8, 8}, 99));
      },
      {{"x", random_tensor({2, 3, 8, 8}, 7)},
       {"weight", random_tensor({4, 3, 3, 3}, 8)},
       {"bias", random_tensor({4}, 9)}});
  EXPECT_LT(report.max_error(), 1e-4);
}

TEST(MaxPool, PicksWindowMaximum) {
  Graph<double> g;
  const Var y = maxpool2d(g, g.input(Tensor<double>({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4})));
  EXPECT_EQ(g.value(y).shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(g.value(y)[0], 4.0);
}

TEST(MaxPool, HalvesSpatialDims) {
  Graph<double> g;
  const Var y = maxpool2d(g, g.input(Tensor<double>({1, 1, 128, 96})));
  EXPECT_EQ(g.value(y).shape(), (Shape{1, 1, 64, 48}));
  Graph<double> g2;
  EXPECT_THROW(maxpool2d(g2, g2.input(Tensor<double>({1, 1, 1, 4}))), ShapeError);
}

TEST(MaxPool, TieRoutesGradientToFirstCell) {
  Graph<double> g;
  const Var x = g.input(Tensor<double>({1, 1, 2, 2}, std::vector<double>{5, 5, 0, 0}), true);
  g.backward(scale(g, sum(g, maxpool2d(g, x)), 2.5));
  const Tensor<double>& dx = g.grad(x);
  EXPECT_EQ(dx[0], 2.5);
  EXPECT_EQ(dx[1] + dx[2] + dx[3], 0.0);
}

TEST(MaxPool, GradientMatchesFiniteDifferences) {
  const auto report = grad_check(
      [](Graph<double>& g, std::span<const Var> v) {
        return weighted_sum(g, maxpool2d(g, v[0]), random_tensor({2, 2, 3, 3}, 31));
      },
      {{"x", random_tensor({2, 2, 6, 7}, 30)}});
  EXPECT_LT(report.max_error(), 1e-6);
}

struct BnState {
  Tensor<double> mean{{3}};
  Tensor<double> var{{3}, 1.0};
  Tensor<double> updates{{1}};
  RunningStats<double> stats() { return {&mean, &var, &updates}; }
};

TEST(BatchNorm, ConstantInputNormalisesToZero) {
  BnState st;
  Graph<double> g;
  const Var y = batch_norm(g, g.input(Tensor<double>({2, 3, 2, 2}, 4.0)),
                           g.input(Tensor<double>({3}, 1.0)), g.input(Tensor<double>({3})),
                           Mode::kTrain, st.stats());
  for (double v : g.value(y).values()) EXPECT_LT(std::abs(v), 1e-3);
}

TEST(BatchNorm, TrainModeStandardisesChannels) {
  BnState st;
  Graph<double> g;
  const Tensor<double> x = random_tensor({4, 3, 3, 5}, 40, 3.0);
  const Var y = batch_norm(g, g.input(x), g.input(Tensor<double>({3}, 1.0)),
                           g.input(Tensor<double>({3})), Mode::kTrain, st.stats());
  const Tensor<double>& out = g.value(y);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t i = 0; i < 15; ++i) {
        const double v = out[(b * 3 + c) * 15 + i];
        s += v;
        s2 += v * v;
        ++n;
      }
    const double mean = s / static_cast<double>(n);
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_NEAR(s2 / static_cast<double>(n) - mean * mean, 1.0, 1e-4);
  }
}

TEST(BatchNorm, RunningStatsFollowMomentum) {
  BnState st;
  const Tensor<double> x = random_tensor({2, 3, 2, 2}, 41);
  Graph<double> g;
  batch_norm(g, g.input(x), g.input(Tensor<double>({3}, 1.0)), g.input(Tensor<double>({3})),
             Mode::kTrain, st.stats());
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0;
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t i = 0; i < 4; ++i) s += x[(b * 3 + c) * 4 + i];
    const double mean = s / 8.0;
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t i = 0; i < 4; ++i) s2 += std::pow(x[(b * 3 + c) * 4 + i] - mean, 2);
    EXPECT_NEAR(st.mean[c], 0.1 * mean, 1e-12);
    EXPECT_NEAR(st.var[c], 0.9 + 0.1 * s2 / 7.0, 1e-12);
  }
  EXPECT_EQ(st.updates[0], 1.0);
}

TEST(BatchNorm, EvalModeUsesRunningStats) {
  BnState st;
  st.mean[0] = 1.0;
  st.var[0] = 4.0;
  st.updates[0] = 1.0;
  Graph<double> g;
  const Tensor<double> gamma({3}, 2.0), beta({3}, 0.5);
  const Var y = batch_norm(g, g.input(Tensor<double>({1, 3, 1, 1}, 3.0)), g.input(gamma),
                           g.input(beta), Mode::kEval, st.stats());
  EXPECT_NEAR(g.value(y)[0], 2.0 * (3.0 - 1.0) / std::sqrt(4.0 + 1e-5) + 0.5, 1e-12);
  EXPECT_EQ(st.updates[0], 1.0);
}

TEST(BatchNorm, EvalModeNeedsInitialisedStats) {
  BnState st;
  Graph<double> g;
  EXPECT_THROW(batch_norm(g, g.input(Tensor<double>({1, 3, 2, 2})),
                          g.input(Tensor<double>({3}, 1.0)), g.input(Tensor<double>({3})),
                          Mode::kEval, st.stats()),
               Error);
}

TEST(BatchNorm, GradientMatchesFiniteDifferences) {
  BnState st;
  const auto report = grad_check(
      [&](Graph<double>& g, std::span<const Var> v) {
        return weighted_sum(g, batch_norm(g, v[0], v[1], v[2], Mode::kTrain, st.stats()),
                            random_tensor({3, 3, 4, 2}, 51));
      },
      {{"x", random_tensor({3, 3, 4, 2}, 50, 2.0)},
       {"gamma", random_tensor({3}, 52)},
       {"beta", random_tensor({3}, 53)}});
  EXPECT_LT(report.max_error(), 1e-3);
}

TEST(Relu, ClampsNegatives) {
  Graph<double> g;
  const Var x = g.input(Tensor<double>({3}, std::vector<double>{-1, 0, 2}), true);
  const Var y = relu(g, x);
  EXPECT_EQ(g.value(y).storage(), (std::vector<double>{0, 0, 2}));
  g.backward(sum(g, y));
  EXPECT_EQ(g.grad(x).storage(), (std::vector<double>{0, 0, 1}));
}

TEST(Relu, AllNegativeGivesZeroGradient) {
  Graph<double> g;
  Tensor<double> neg = random_tensor({4, 4}, 60);
  for (double& v : neg.storage()) v = -std::abs(v) - 0.01;
  const Var x = g.input(neg, true);
  const Var y = relu(g, x);
  for (double v : g.value(y).values()) EXPECT_EQ(v, 0.0);
  g.backward(sum(g, y));
  for (double v : g.grad(x).values()) EXPECT_EQ(v, 0.0);
}

TEST(Relu, GradientAwayFromKink) {
  Tensor<double> x = random_tensor({5, 6}, 61);
  for (double& v : x.storage()) v = std::abs(v) + 0.1;
  for (std::size_t i = 0; i < x.numel(); i += 2) x[i] = -x[i];
  const auto report = grad_check(
      [](Graph<double>& g, std::span<const Var> v) {
        return weighted_sum(g, relu(g, v[0]), random_tensor({5, 6}, 62));
      },
      {{"x", x}});
  EXPECT_LT(report.max_error(), 1e-6);
}

TEST(Affine, IdentityAndBiasOnly) {
  Tensor<double> eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 4] = 1.0;
  const Tensor<double> x = random_tensor({2, 3}, 70);
  Graph<double> g;
  EXPECT_EQ(g.value(affine(g, g.input(x), g.input(eye), g.input(Tensor<double>({3})))), x);
  const Tensor<double> b({4}, std::vector<double>{1, -2, 3, 0.5});
  const Tensor<double>& out = g.value(affine(g, g.input(x), g.input(Tensor<double>({4, 3})), g.input(b)));
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out[r * 4 + c], b[c]);
  EXPECT_THROW(affine(g, g.input(x), g.input(Tensor<double>({4, 2})), g.input(b)), ShapeError);
}

TEST(Affine, GradientMatchesFiniteDifferences) {
  const auto report = grad_check(
      [](Graph<double>& g, std::span<const Var> v) {
        return weighted_sum(g, affine(g, v[0], v[1], v[2]), random_tensor({4, 5}, 83));
      },
      {{"x", random_tensor({4, 7}, 80)},
       {"weight", random_tensor({5, 7}, 81)},
       {"bias", random_tensor({5}, 82)}});
  EXPECT_LT(report.max_error(), 1e-5);
}

TEST(LogSoftmax, UniformLogits) {
  Graph<double> g;
  const Var y = log_softmax(g, g.input(Tensor<double>({1, 4}, 0.7)));
  for (double v : g.value(y).values()) EXPECT_NEAR(v, std::log(0.25), 1e-12);
}

TEST(LogSoftmax, LargeLogitsStayFinite) {
  Graph<double> g;
  const Var y = log_softmax(g, g.input(Tensor<double>({1, 2}, std::vector<double>{1000, 0})));
  EXPECT_TRUE(std::isfinite(g.value(y)[0]));
  EXPECT_TRUE(std::isfinite(g.value(y)[1]));
  EXPECT_NEAR(g.value(y)[0], 0.0, 1e-12);
  EXPECT_NEAR(g.value(y)[1], -1000.0, 1e-9);
}

TEST(LogSoftmax, RowsExponentiateToOne) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Graph<double> g;
    const Var y = log_softmax(g, g.input(random_tensor({5, 9}, seed, 50.0)));
    const Tensor<double>& out = g.value(y);
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 9; ++c) s += std::exp(out[r * 9 + c]);
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(LogSoftmax, GradientMatchesFiniteDifferences) {
  const auto report = grad_check(
      [](Graph<double>& g, std::span<const Var> v) {
        return weighted_sum(g, log_softmax(g, v[0]), random_tensor({3, 6}, 91));
      },
      {{"x", random_tensor({3, 6}, 90, 3.0)}});
  EXPECT_LT(report.max_error(), 1e-5);
}

TEST(ShapeOps, PermuteAndReshapeRoundTrip) {
  Graph<double> g;
  const Tensor<double> x = random_tensor({2, 3, 4}, 100);
  const std::size_t axes[] = {2, 0, 1};
  const std::size_t back[] = {1, 2, 0};
  const Var p = permute<double>(g, g.input(x), axes);
  EXPECT_EQ(g.value(p).shape(), (Shape{4, 2, 3}));
  EXPECT_EQ(g.value(p)[1 * 6 + 0 * 3 + 2], x[0 * 12 + 2 * 4 + 1]);
  EXPECT_EQ(g.value(permute<double>(g, p, back)), x);
  EXPECT_THROW(reshape(g, p, {5, 5}), ShapeError);
}

TEST(ShapeOps, GradientsOfPlumbing) {
  const auto report = grad_check(
      [](Graph<double>& g, std::span<const Var> v) {
        const std::size_t axes[] = {1, 0, 2};
        const std::size_t lengths[] = {3, 1};
        Var a = permute<double>(g, v[0], axes);            // [3,2,4]
        a = reverse_within(g, a, lengths);
        a = mask_frames(g, a, lengths);
        const Var parts[] = {slice_last(g, a, 0, 2), tanh(g, slice_last(g, a, 2, 4))};
        const Var c = concat_last<double>(g, parts);
        const Var rows[] = {select(g, c, 0), sigmoid(g, select(g, c, 2))};
        const Var s = stack<double>(g, rows);               // [2,2,4]
        const Var picked = select_sample(g, c, 1, 2);      // [2,4]
        return add(g, weighted_sum(g, s, random_tensor({2, 2, 4}, 111)),
                   weighted_sum(g, picked, random_tensor({2, 4}, 112)));
      },
      {{"x", random_tensor({2, 3, 4}, 110)}});
  EXPECT_LT(report.max_error(), 1e-6);
}

}  // namespace
}  // namespace r2crnn
