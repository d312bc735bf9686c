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

#include "r2crnn/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "r2crnn/errors.h"

namespace r2crnn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

void require_rank(const Shape& s, std::size_t rank, const char* op,
                  const char* what) {
  require(s.size() == rank, std::string(op) + ": " + what + " must have rank " +
                                std::to_string(rank) + ", got " + shape_str(s));
}

std::string dim_mismatch(const char* op, const char* what, std::size_t axis,
                         std::size_t got, std::size_t want) {
  return std::string(op) + ": " + what + " dim " + std::to_string(axis) +
         " is " + std::to_string(got) + ", expected " + std::to_string(want);
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  require(a == b, std::string(op) + ": shape mismatch " + shape_str(a) +
                      " vs " + shape_str(b));
}

// ---------------------------------------------------------------- conv2d

struct ConvGeom {
  std::size_t batch, cin, h, w, cout, kh, kw, sh, sw, ph, pw, ho, wo;
  std::size_t patch() const { return cin * kh * kw; }
  std::size_t pixels() const { return ho * wo; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && sh == 1 && sw == 1 && ph == 0 && pw == 0;
  }
};

// Output columns ox with 0 <= ox*stride + offset - pad < extent.
void valid_range(std::size_t out, std::size_t stride, std::size_t offset,
                 std::size_t pad, std::size_t extent, std::size_t& lo,
                 std::size_t& hi) {
  const long s = static_cast<long>(stride);
  const long shift = static_cast<long>(offset) - static_cast<long>(pad);
  long first = shift >= 0 ? 0 : (-shift + s - 1) / s;
  long last = (static_cast<long>(extent) - 1 - shift);
  last = last < 0 ? -1 : last / s;
  first = std::min<long>(first, static_cast<long>(out));
  last = std::min<long>(last, static_cast<long>(out) - 1);
  lo = static_cast<std::size_t>(first);
  hi = last < first ? lo : static_cast<std::size_t>(last + 1);
}

template <typename T>
void im2col(const T* x, const ConvGeom& c, T* cols) {
  const std::size_t n = c.pixels();
  for (std::size_t ch = 0; ch < c.cin; ++ch) {
    for (std::size_t i = 0; i < c.kh; ++i) {
      for (std::size_t j = 0; j < c.kw; ++j) {
        T* dst = cols + ((ch * c.kh + i) * c.kw + j) * n;
        std::size_t xlo, xhi;
        valid_range(c.wo, c.sw, j, c.pw, c.w, xlo, xhi);
        for (std::size_t oy = 0; oy < c.ho; ++oy) {
          T* row = dst + oy * c.wo;
          const long iy = static_cast<long>(oy * c.sh + i) - static_cast<long>(c.ph);
          if (iy < 0 || iy >= static_cast<long>(c.h)) {
            std::fill(row, row + c.wo, T(0));
            continue;
          }
          const T* src = x + (ch * c.h + static_cast<std::size_t>(iy)) * c.w;
          std::fill(row, row + xlo, T(0));
          for (std::size_t ox = xlo; ox < xhi; ++ox) {
            row[ox] = src[ox * c.sw + j - c.pw];
          }
          std::fill(row + xhi, row + c.wo, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& c, T* dx) {
  const std::size_t n = c.pixels();
  for (std::size_t ch = 0; ch < c.cin; ++ch) {
    for (std::size_t i = 0; i < c.kh; ++i) {
      for (std::size_t j = 0; j < c.kw; ++j) {
        const T* src = cols + ((ch * c.kh + i) * c.kw + j) * n;
        std::size_t xlo, xhi;
        valid_range(c.wo, c.sw, j, c.pw, c.w, xlo, xhi);
        for (std::size_t oy = 0; oy < c.ho; ++oy) {
          const long iy = static_cast<long>(oy * c.sh + i) - static_cast<long>(c.ph);
          if (iy < 0 || iy >= static_cast<long>(c.h)) continue;
          T* dst = dx + (ch * c.h + static_cast<std::size_t>(iy)) * c.w;
          const T* row = src + oy * c.wo;
          for (std::size_t ox = xlo; ox < xhi; ++ox) {
            dst[ox * c.sw + j - c.pw] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var conv2d(Graph<T>& g, Var x, Var weight, Var bias, Conv2dOptions opts) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& wv = g.value(weight);
  const Tensor<T>& bv = g.value(bias);
  require_rank(xv.shape(), 4, "conv2d", "input");
  require_rank(wv.shape(), 4, "conv2d", "weight");
  require_rank(bv.shape(), 1, "conv2d", "bias");
  require(opts.stride[0] > 0 && opts.stride[1] > 0, "conv2d: stride must be positive");
  ConvGeom c{};
  c.batch = xv.dim(0);
  c.cin = xv.dim(1);
  c.h = xv.dim(2);
  c.w = xv.dim(3);
  c.cout = wv.dim(0);
  c.kh = wv.dim(2);
  c.kw = wv.dim(3);
  c.sh = opts.stride[0];
  c.sw = opts.stride[1];
  c.ph = opts.padding[0];
  c.pw = opts.padding[1];
  require(wv.dim(1) == c.cin, dim_mismatch("conv2d", "weight", 1, wv.dim(1), c.cin));
  require(bv.dim(0) == c.cout, dim_mismatch("conv2d", "bias", 0, bv.dim(0), c.cout));
  require(c.kh <= c.h + 2 * c.ph,
          "conv2d: kernel height " + std::to_string(c.kh) +
              " exceeds padded input height " + std::to_string(c.h + 2 * c.ph));
  require(c.kw <= c.w + 2 * c.pw,
          "conv2d: kernel width " + std::to_string(c.kw) +
              " exceeds padded input width " + std::to_string(c.w + 2 * c.pw));
  c.ho = (c.h + 2 * c.ph - c.kh) / c.sh + 1;
  c.wo = (c.w + 2 * c.pw - c.kw) / c.sw + 1;

  const std::size_t k = c.patch();
  const std::size_t n = c.pixels();
  Tensor<T> out({c.batch, c.cout, c.ho, c.wo});
  ConstMatMap<T> wm(wv.data(), static_cast<long>(c.cout), static_cast<long>(k));
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bvec(bv.data(),
                                                            static_cast<long>(c.cout));
  std::vector<T> cols(c.pointwise() ? 0 : k * n);
  for (std::size_t b = 0; b < c.batch; ++b) {
    const T* xb = xv.data() + b * c.cin * c.h * c.w;
    const T* colp = xb;
    if (!c.pointwise()) {
      im2col(xb, c, cols.data());
      colp = cols.data();
    }
    ConstMatMap<T> cm(colp, static_cast<long>(k), static_cast<long>(n));
    MatMap<T> om(out.data() + b * c.cout * n, static_cast<long>(c.cout),
                 static_cast<long>(n));
    om.noalias() = wm * cm;
    om.colwise() += bvec;
  }

  return g.record(OpKind::kConv2d, std::move(out), {x, weight, bias},
                  [c, x, weight, bias](Graph<T>& g, Var self) {
    const std::size_t k = c.patch();
    const std::size_t n = c.pixels();
    const Tensor<T>& dy = g.grad(self);
    const Tensor<T>& xv = g.value(x);
    const Tensor<T>& wv = g.value(weight);
    ConstMatMap<T> wm(wv.data(), static_cast<long>(c.cout), static_cast<long>(k));
    const bool need_x = g.requires_grad(x);
    const bool need_w = g.requires_grad(weight);
    const bool need_b = g.requires_grad(bias);
    RowMat<T> dw = RowMat<T>::Zero(static_cast<long>(c.cout), static_cast<long>(k));
    Eigen::Matrix<T, Eigen::Dynamic, 1> db =
        Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(static_cast<long>(c.cout));
    std::vector<T> cols(c.pointwise() ? 0 : k * n);
    std::vector<T> dcols(need_x && !c.pointwise() ? k * n : 0);
    T* dx = need_x ? g.accumulator(x).data() : nullptr;
    for (std::size_t b = 0; b < c.batch; ++b) {
      ConstMatMap<T> dym(dy.data() + b * c.cout * n, static_cast<long>(c.cout),
                         static_cast<long>(n));
      const T* xb = xv.data() + b * c.cin * c.h * c.w;
      if (need_w) {
        const T* colp = xb;
        if (!c.pointwise()) {
          im2col(xb, c, cols.data());
          colp = cols.data();
        }
        ConstMatMap<T> cm(colp, static_cast<long>(k), static_cast<long>(n));
        dw.noalias() += dym * cm.transpose();
      }
      if (need_b) db += dym.rowwise().sum();
      if (need_x) {
        T* dxb = dx + b * c.cin * c.h * c.w;
        if (c.pointwise()) {
          MatMap<T> dxm(dxb, static_cast<long>(k), static_cast<long>(n));
          dxm.noalias() += wm.transpose() * dym;
        } else {
          MatMap<T> dcm(dcols.data(), static_cast<long>(k), static_cast<long>(n));
          dcm.noalias() = wm.transpose() * dym;
          col2im_add(dcols.data(), c, dxb);
        }
      }
    }
#ifdef R2CRNN_MUTATE_CONV_BACKWARD
    dw = -dw;
#endif
    if (need_w) {
      MatMap<T> gw(g.accumulator(weight).data(), static_cast<long>(c.cout),
                   static_cast<long>(k));
      gw += dw;
    }
    if (need_b) {
      Tensor<T>& gb = g.accumulator(bias);
      for (std::size_t o = 0; o < c.cout; ++o) gb[o] += db[static_cast<long>(o)];
    }
  });
}

// ------------------------------------------------------------- maxpool2d

template <typename T>
Var maxpool2d(Graph<T>& g, Var x, Pair window, Pair stride) {
  const Tensor<T>& xv = g.value(x);
  require_rank(xv.shape(), 4, "maxpool2d", "input");
  require(window[0] > 0 && window[1] > 0 && stride[0] > 0 && stride[1] > 0,
          "maxpool2d: window and stride must be positive");
  const std::size_t bc = xv.dim(0) * xv.dim(1);
  const std::size_t h = xv.dim(2), w = xv.dim(3);
  require(h >= window[0], dim_mismatch("maxpool2d", "input", 2, h, window[0]) +
                              " or more (window)");
  require(w >= window[1], dim_mismatch("maxpool2d", "input", 3, w, window[1]) +
                              " or more (window)");
  const std::size_t ho = (h - window[0]) / stride[0] + 1;
  const std::size_t wo = (w - window[1]) / stride[1] + 1;
  Tensor<T> out({xv.dim(0), xv.dim(1), ho, wo});
  std::vector<std::size_t> argmax(out.numel());
  for (std::size_t p = 0; p < bc; ++p) {
    const T* src = xv.data() + p * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (oy * stride[0]) * w + ox * stride[1];
        for (std::size_t i = 0; i < window[0]; ++i) {
          for (std::size_t j = 0; j < window[1]; ++j) {
            const std::size_t idx = (oy * stride[0] + i) * w + ox * stride[1] + j;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = (p * ho + oy) * wo + ox;
        out[o] = src[best];
        argmax[o] = p * h * w + best;
      }
    }
  }
  return g.record(OpKind::kMaxPool2d, std::move(out), {x},
                  [argmax = std::move(argmax), x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += dy[o];
  });
}

// ------------------------------------------------------------ batch_norm

template <typename T>
Var batch_norm(Graph<T>& g, Var x, Var gamma, Var beta, Mode mode,
               RunningStats<T> stats, BatchNormOptions opts) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& gv = g.value(gamma);
  const Tensor<T>& bv = g.value(beta);
  require_rank(xv.shape(), 4, "batch_norm", "input");
  const std::size_t batch = xv.dim(0), ch = xv.dim(1);
  const std::size_t plane = xv.dim(2) * xv.dim(3);
  require(gv.shape() == Shape{ch}, dim_mismatch("batch_norm", "gamma", 0, gv.numel(), ch));
  require(bv.shape() == Shape{ch}, dim_mismatch("batch_norm", "beta", 0, bv.numel(), ch));
  if (!stats.mean || !stats.var || !stats.updates) {
    throw Error("batch_norm: running statistics not bound");
  }
  require(stats.mean->numel() == ch && stats.var->numel() == ch,
          dim_mismatch("batch_norm", "running stats", 0, stats.mean->numel(), ch));
  const std::size_t count = batch * plane;

  std::vector<T> inv_std(ch);
  Tensor<T> xhat(xv.shape());
  Tensor<T> out(xv.shape());
  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < ch; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xv.data() + (b * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double mean = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xv.data() + (b * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(count);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + opts.eps));
      const double unbiased =
          count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      T& rm = (*stats.mean)[c];
      T& rv = (*stats.var)[c];
      rm = static_cast<T>(opts.momentum * rm + (1.0 - opts.momentum) * mean);
      rv = static_cast<T>(opts.momentum * rv + (1.0 - opts.momentum) * unbiased);
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const T xh = static_cast<T>((xv[off + i] - mean)) * inv_std[c];
          xhat[off + i] = xh;
          out[off + i] = gv[c] * xh + bv[c];
        }
      }
    }
    (*stats.updates)[0] += T(1);
  } else {
    if ((*stats.updates)[0] <= T(0)) {
      throw Error("batch_norm: eval mode with uninitialized running statistics");
    }
    for (std::size_t c = 0; c < ch; ++c) {
      const T mean = (*stats.mean)[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>((*stats.var)[c]) + opts.eps));
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const T xh = (xv[off + i] - mean) * inv_std[c];
          xhat[off + i] = xh;
          out[off + i] = gv[c] * xh + bv[c];
        }
      }
    }
  }

  return g.record(
      OpKind::kBatchNorm, std::move(out), {x, gamma, beta},
      [mode, batch, ch, plane, count, inv_std = std::move(inv_std),
       xhat = std::move(xhat), x, gamma, beta](Graph<T>& g, Var self) {
        const Tensor<T>& dy = g.grad(self);
        const Tensor<T>& gv = g.value(gamma);
        std::vector<double> sum_dy(ch, 0.0), sum_dy_xhat(ch, 0.0);
        for (std::size_t c = 0; c < ch; ++c) {
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * ch + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_dy[c] += dy[off + i];
              sum_dy_xhat[c] += static_cast<double>(dy[off + i]) * xhat[off + i];
            }
          }
        }
        if (g.requires_grad(gamma)) {
          Tensor<T>& dg = g.accumulator(gamma);
          for (std::size_t c = 0; c < ch; ++c) dg[c] += static_cast<T>(sum_dy_xhat[c]);
        }
        if (g.requires_grad(beta)) {
          Tensor<T>& db = g.accumulator(beta);
          for (std::size_t c = 0; c < ch; ++c) db[c] += static_cast<T>(sum_dy[c]);
        }
        if (!g.requires_grad(x)) return;
        Tensor<T>& dx = g.accumulator(x);
        const double n = static_cast<double>(count);
        for (std::size_t c = 0; c < ch; ++c) {
          const double k = static_cast<double>(gv[c]) * inv_std[c];
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * ch + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              if (mode == Mode::kTrain) {
                dx[off + i] += static_cast<T>(
                    k / n * (n * dy[off + i] - sum_dy[c] - xhat[off + i] * sum_dy_xhat[c]));
              } else {
                dx[off + i] += static_cast<T>(k * dy[off + i]);
              }
            }
          }
        }
      });
}

// ----------------------------------------------------------- pointwise

template <typename T>
Var relu(Graph<T>& g, Var x) {
  Tensor<T> out = g.value(x);
  for (T& v : out.storage()) v = v > T(0) ? v : T(0);
  return g.record(OpKind::kRelu, std::move(out), {x}, [x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    const Tensor<T>& y = g.value(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      if (y[i] > T(0)) dx[i] += dy[i];
    }
  });
}

template <typename T>
Var sigmoid(Graph<T>& g, Var x) {
  Tensor<T> out = g.value(x);
  for (T& v : out.storage()) {
    if (v >= T(0)) {
      v = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      v = e / (T(1) + e);
    }
  }
  return g.record(OpKind::kSigmoid, std::move(out), {x}, [x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    const Tensor<T>& y = g.value(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var tanh(Graph<T>& g, Var x) {
  Tensor<T> out = g.value(x);
  for (T& v : out.storage()) v = std::tanh(v);
  return g.record(OpKind::kTanh, std::move(out), {x}, [x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    const Tensor<T>& y = g.value(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[i] * (T(1) - y[i] * y[i]);
  });
}

// --------------------------------------------------------------- affine

template <typename T>
Var affine(Graph<T>& g, Var x, Var weight, Var bias) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& wv = g.value(weight);
  require_rank(xv.shape(), 2, "affine", "input");
  require_rank(wv.shape(), 2, "affine", "weight");
  const std::size_t rows = xv.dim(0), in = xv.dim(1), outd = wv.dim(0);
  require(wv.dim(1) == in, dim_mismatch("affine", "weight", 1, wv.dim(1), in));
  if (bias.valid()) {
    const Tensor<T>& bv = g.value(bias);
    require(bv.shape() == Shape{outd}, dim_mismatch("affine", "bias", 0, bv.numel(), outd));
  }
  Tensor<T> out({rows, outd});
  ConstMatMap<T> xm(xv.data(), static_cast<long>(rows), static_cast<long>(in));
  ConstMatMap<T> wm(wv.data(), static_cast<long>(outd), static_cast<long>(in));
  MatMap<T> om(out.data(), static_cast<long>(rows), static_cast<long>(outd));
  om.noalias() = xm * wm.transpose();
  if (bias.valid()) {
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bvec(
        g.value(bias).data(), static_cast<long>(outd));
    om.rowwise() += bvec;
  }
  std::vector<Var> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return g.record(OpKind::kAffine, std::move(out), std::move(inputs),
                  [rows, in, outd, x, weight, bias](Graph<T>& g, Var self) {
    ConstMatMap<T> dy(g.grad(self).data(), static_cast<long>(rows),
                      static_cast<long>(outd));
    if (g.requires_grad(x)) {
      ConstMatMap<T> wm(g.value(weight).data(), static_cast<long>(outd),
                        static_cast<long>(in));
      MatMap<T> dx(g.accumulator(x).data(), static_cast<long>(rows),
                   static_cast<long>(in));
      dx.noalias() += dy * wm;
    }
    if (g.requires_grad(weight)) {
      ConstMatMap<T> xm(g.value(x).data(), static_cast<long>(rows),
                        static_cast<long>(in));
      MatMap<T> dw(g.accumulator(weight).data(), static_cast<long>(outd),
                   static_cast<long>(in));
      dw.noalias() += dy.transpose() * xm;
    }
    if (bias.valid() && g.requires_grad(bias)) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(
          g.accumulator(bias).data(), static_cast<long>(outd));
      db += dy.colwise().sum();
    }
  });
}

// ---------------------------------------------------------- log_softmax

template <typename T>
Var log_softmax(Graph<T>& g, Var x) {
  const Tensor<T>& xv = g.value(x);
  const std::size_t k = xv.shape().back();
  const std::size_t rows = xv.numel() / k;
  Tensor<T> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = xv.data() + r * k;
    T* dst = out.data() + r * k;
    const T mx = *std::max_element(src, src + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(static_cast<double>(src[j] - mx));
    const T lse = mx + static_cast<T>(std::log(s));
    for (std::size_t j = 0; j < k; ++j) dst[j] = src[j] - lse;
  }
  return g.record(OpKind::kLogSoftmax, std::move(out), {x},
                  [rows, k, x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    const Tensor<T>& y = g.value(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += dy[r * k + j];
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t i = r * k + j;
        dx[i] += dy[i] - static_cast<T>(std::exp(static_cast<double>(y[i])) * s);
      }
    }
  });
}

// ------------------------------------------------------------ arithmetic

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  const Tensor<T>& av = g.value(a);
  const Tensor<T>& bv = g.value(b);
  require_same_shape(av.shape(), bv.shape(), "add");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
  return g.record(OpKind::kAdd, std::move(out), {a, b}, [a, b](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    for (Var in : {a, b}) {
      if (!g.requires_grad(in)) continue;
      Tensor<T>& d = g.accumulator(in);
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += dy[i];
    }
  });
}

template <typename T>
Var mul(Graph<T>& g, Var a, Var b) {
  const Tensor<T>& av = g.value(a);
  const Tensor<T>& bv = g.value(b);
  require_same_shape(av.shape(), bv.shape(), "mul");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  return g.record(OpKind::kMul, std::move(out), {a, b}, [a, b](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    if (g.requires_grad(a)) {
      const Tensor<T>& bv = g.value(b);
      Tensor<T>& d = g.accumulator(a);
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += dy[i] * bv[i];
    }
    if (g.requires_grad(b)) {
      const Tensor<T>& av = g.value(a);
      Tensor<T>& d = g.accumulator(b);
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += dy[i] * av[i];
    }
  });
}

template <typename T>
Var scale(Graph<T>& g, Var a, T factor) {
  Tensor<T> out = g.value(a);
  for (T& v : out.storage()) v *= factor;
  return g.record(OpKind::kScale, std::move(out), {a}, [a, factor](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& d = g.accumulator(a);
    for (std::size_t i = 0; i < d.numel(); ++i) d[i] += dy[i] * factor;
  });
}

template <typename T>
Var sum(Graph<T>& g, Var a) {
  double s = 0.0;
  for (T v : g.value(a).values()) s += v;
  return g.record(OpKind::kSum, Tensor<T>::scalar(static_cast<T>(s)), {a},
                  [a](Graph<T>& g, Var self) {
    const T dy = g.grad(self)[0];
    Tensor<T>& d = g.accumulator(a);
    for (T& v : d.storage()) v += dy;
  });
}

template <typename T>
Var weighted_sum(Graph<T>& g, Var a, const Tensor<T>& weights) {
  const Tensor<T>& av = g.value(a);
  require_same_shape(av.shape(), weights.shape(), "weighted_sum");
  double s = 0.0;
  for (std::size_t i = 0; i < av.numel(); ++i) s += static_cast<double>(av[i]) * weights[i];
  return g.record(OpKind::kWeightedSum, Tensor<T>::scalar(static_cast<T>(s)), {a},
                  [a, weights](Graph<T>& g, Var self) {
    const T dy = g.grad(self)[0];
    Tensor<T>& d = g.accumulator(a);
    for (std::size_t i = 0; i < d.numel(); ++i) d[i] += dy * weights[i];
  });
}

// ------------------------------------------------------------ structure

template <typename T>
Var slice_last(Graph<T>& g, Var x, std::size_t begin, std::size_t end) {
  const Tensor<T>& xv = g.value(x);
  const std::size_t k = xv.shape().back();
  require(begin < end && end <= k,
          "slice_last: range [" + std::to_string(begin) + "," + std::to_string(end) +
              ") invalid for last dim " + std::to_string(k));
  const std::size_t rows = xv.numel() / k, width = end - begin;
  Shape shape = xv.shape();
  shape.back() = width;
  Tensor<T> out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xv.data() + r * k + begin, width, out.data() + r * width);
  }
  return g.record(OpKind::kSlice, std::move(out), {x},
                  [rows, k, begin, width, x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < width; ++j) dx[r * k + begin + j] += dy[r * width + j];
    }
  });
}

template <typename T>
Var concat_last(Graph<T>& g, std::span<const Var> parts) {
  require(!parts.empty(), "concat_last: no inputs");
  Shape lead = g.value(parts[0]).shape();
  lead.pop_back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    Shape s = g.value(p).shape();
    const std::size_t w = s.back();
    s.pop_back();
    require(s == lead, "concat_last: leading dims " + shape_str(s) + " vs " +
                           shape_str(lead));
    widths.push_back(w);
    total += w;
  }
  const std::size_t rows = g.value(parts[0]).numel() / widths[0];
  Shape shape = lead;
  shape.push_back(total);
  Tensor<T> out(shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor<T>& v = g.value(parts[p]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data() + r * widths[p], widths[p], out.data() + r * total + offset);
    }
    offset += widths[p];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(OpKind::kConcat, std::move(out), inputs,
                  [inputs, widths, rows, total](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    std::size_t offset = 0;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
      if (g.requires_grad(inputs[p])) {
        Tensor<T>& d = g.accumulator(inputs[p]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < widths[p]; ++j) {
            d[r * widths[p] + j] += dy[r * total + offset + j];
          }
        }
      }
      offset += widths[p];
    }
  });
}

template <typename T>
Var select(Graph<T>& g, Var x, std::size_t index) {
  const Tensor<T>& xv = g.value(x);
  require(index < xv.dim(0), "select: index " + std::to_string(index) +
                                 " out of range for dim 0 of " + shape_str(xv.shape()));
  Shape shape(xv.shape().begin() + 1, xv.shape().end());
  if (shape.empty()) shape = {1};
  const std::size_t inner = xv.numel() / xv.dim(0);
  std::vector<T> data(xv.data() + index * inner, xv.data() + (index + 1) * inner);
  return g.record(OpKind::kSelect, Tensor<T>(shape, std::move(data)), {x},
                  [index, inner, x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t i = 0; i < inner; ++i) dx[index * inner + i] += dy[i];
  });
}

template <typename T>
Var stack(Graph<T>& g, std::span<const Var> parts) {
  require(!parts.empty(), "stack: no inputs");
  const Shape inner_shape = g.value(parts[0]).shape();
  for (Var p : parts) require_same_shape(g.value(p).shape(), inner_shape, "stack");
  const std::size_t inner = shape_numel(inner_shape);
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner_shape.begin(), inner_shape.end());
  Tensor<T> out(shape);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    std::copy_n(g.value(parts[p]).data(), inner, out.data() + p * inner);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(OpKind::kStack, std::move(out), inputs,
                  [inputs, inner](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    for (std::size_t p = 0; p < inputs.size(); ++p) {
      if (!g.requires_grad(inputs[p])) continue;
      Tensor<T>& d = g.accumulator(inputs[p]);
      for (std::size_t i = 0; i < inner; ++i) d[i] += dy[p * inner + i];
    }
  });
}

template <typename T>
Var reshape(Graph<T>& g, Var x, Shape shape) {
  Tensor<T> out = g.value(x).reshaped(std::move(shape));
  return g.record(OpKind::kReshape, std::move(out), {x}, [x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[i];
  });
}

template <typename T>
Var permute(Graph<T>& g, Var x, std::span<const std::size_t> axes) {
  const Tensor<T>& xv = g.value(x);
  const std::size_t rank = xv.rank();
  require(axes.size() == rank, "permute: " + std::to_string(axes.size()) +
                                   " axes for rank " + std::to_string(rank));
  std::vector<bool> seen(rank, false);
  for (std::size_t a : axes) {
    require(a < rank && !seen[a], "permute: axes are not a permutation");
    seen[a] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) in_strides[i - 1] = in_strides[i] * xv.dim(i);
  Shape shape(rank);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = xv.dim(axes[i]);
    src_stride[i] = in_strides[axes[i]];
  }
  // Flat source offset of every output element.
  std::vector<std::size_t> source(xv.numel());
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t o = 0; o < source.size(); ++o) {
    source[o] = off;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off += src_stride[d];
      if (idx[d] < shape[d]) break;
      off -= src_stride[d] * shape[d];
      idx[d] = 0;
    }
  }
  Tensor<T> out(shape);
  for (std::size_t o = 0; o < source.size(); ++o) out[o] = xv[source[o]];
  return g.record(OpKind::kPermute, std::move(out), {x},
                  [source = std::move(source), x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t o = 0; o < source.size(); ++o) dx[source[o]] += dy[o];
  });
}

namespace {

template <typename T>
void check_sequence(const Tensor<T>& xv, std::span<const std::size_t> lengths,
                    const char* op) {
  require_rank(xv.shape(), 3, op, "sequence");
  require(lengths.size() == xv.dim(1),
          std::string(op) + ": " + std::to_string(lengths.size()) +
              " lengths for batch dim " + std::to_string(xv.dim(1)));
  for (std::size_t len : lengths) {
    require(len <= xv.dim(0), std::string(op) + ": length " + std::to_string(len) +
                                  " exceeds frame count " + std::to_string(xv.dim(0)));
  }
}

}  // namespace

template <typename T>
Var reverse_within(Graph<T>& g, Var x, std::span<const std::size_t> lengths) {
  const Tensor<T>& xv = g.value(x);
  check_sequence(xv, lengths, "reverse_within");
  const std::size_t frames = xv.dim(0), batch = xv.dim(1), n = xv.dim(2);
  // Involution: applying the same frame map in backward is its inverse.
  std::vector<std::size_t> source(frames * batch);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t len = lengths[b];
      source[t * batch + b] = (t < len ? len - 1 - t : t) * batch + b;
    }
  }
  Tensor<T> out(xv.shape());
  for (std::size_t r = 0; r < source.size(); ++r) {
    std::copy_n(xv.data() + source[r] * n, n, out.data() + r * n);
  }
  return g.record(OpKind::kReverseWithin, std::move(out), {x},
                  [source = std::move(source), n, x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t r = 0; r < source.size(); ++r) {
      for (std::size_t j = 0; j < n; ++j) dx[source[r] * n + j] += dy[r * n + j];
    }
  });
}

template <typename T>
Var mask_frames(Graph<T>& g, Var x, std::span<const std::size_t> lengths) {
  const Tensor<T>& xv = g.value(x);
  check_sequence(xv, lengths, "mask_frames");
  const std::size_t frames = xv.dim(0), batch = xv.dim(1), n = xv.dim(2);
  std::vector<std::size_t> lens(lengths.begin(), lengths.end());
  Tensor<T> out = xv;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (t < lens[b]) continue;
      std::fill_n(out.data() + (t * batch + b) * n, n, T(0));
    }
  }
  return g.record(OpKind::kMaskFrames, std::move(out), {x},
                  [lens, frames, batch, n, x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t b = 0; b < batch; ++b) {
        if (t >= lens[b]) continue;
        const std::size_t off = (t * batch + b) * n;
        for (std::size_t j = 0; j < n; ++j) dx[off + j] += dy[off + j];
      }
    }
  });
}

template <typename T>
Var select_sample(Graph<T>& g, Var x, std::size_t sample, std::size_t length) {
  const Tensor<T>& xv = g.value(x);
  require_rank(xv.shape(), 3, "select_sample", "sequence");
  const std::size_t batch = xv.dim(1), n = xv.dim(2);
  require(sample < batch, "select_sample: sample " + std::to_string(sample) +
                              " out of range for batch dim " + std::to_string(batch));
  require(length >= 1 && length <= xv.dim(0),
          "select_sample: length " + std::to_string(length) + " invalid for " +
              std::to_string(xv.dim(0)) + " frames");
  Tensor<T> out({length, n});
  for (std::size_t t = 0; t < length; ++t) {
    std::copy_n(xv.data() + (t * batch + sample) * n, n, out.data() + t * n);
  }
  return g.record(OpKind::kSelectSample, std::move(out), {x},
                  [sample, length, batch, n, x](Graph<T>& g, Var self) {
    const Tensor<T>& dy = g.grad(self);
    Tensor<T>& dx = g.accumulator(x);
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t j = 0; j < n; ++j) dx[(t * batch + sample) * n + j] += dy[t * n + j];
    }
  });
}

#define R2CRNN_INSTANTIATE_OPS(T)                                                   \
  template Var conv2d<T>(Graph<T>&, Var, Var, Var, Conv2dOptions);                  \
  template Var maxpool2d<T>(Graph<T>&, Var, Pair, Pair);                            \
  template Var batch_norm<T>(Graph<T>&, Var, Var, Var, Mode, RunningStats<T>,       \
                             BatchNormOptions);                                     \
  template Var relu<T>(Graph<T>&, Var);                                             \
  template Var sigmoid<T>(Graph<T>&, Var);                                          \
  template Var tanh<T>(Graph<T>&, Var);                                             \
  template Var affine<T>(Graph<T>&, Var, Var, Var);                                 \
  template Var log_softmax<T>(Graph<T>&, Var);                                      \
  template Var add<T>(Graph<T>&, Var, Var);                                         \
  template Var mul<T>(Graph<T>&, Var, Var);                                         \
  template Var scale<T>(Graph<T>&, Var, T);                                         \
  template Var sum<T>(Graph<T>&, Var);                                              \
  template Var weighted_sum<T>(Graph<T>&, Var, const Tensor<T>&);                   \
  template Var slice_last<T>(Graph<T>&, Var, std::size_t, std::size_t);             \
  template Var concat_last<T>(Graph<T>&, std::span<const Var>);                     \
  template Var select<T>(Graph<T>&, Var, std::size_t);                              \
  template Var stack<T>(Graph<T>&, std::span<const Var>);                           \
  template Var reshape<T>(Graph<T>&, Var, Shape);                                   \
  template Var permute<T>(Graph<T>&, Var, std::span<const std::size_t>);            \
  template Var reverse_within<T>(Graph<T>&, Var, std::span<const std::size_t>);     \
  template Var mask_frames<T>(Graph<T>&, Var, std::span<const std::size_t>);        \
  template Var select_sample<T>(Graph<T>&, Var, std::size_t, std::size_t);

R2CRNN_INSTANTIATE_OPS(float)
R2CRNN_INSTANTIATE_OPS(double)

}  // namespace r2crnn
