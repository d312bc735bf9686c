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

#include "r2crnn/image.h"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "r2crnn/errors.h"

namespace r2crnn {

GrayImage decode_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DataError("image not found: " + path.string());
  }
  cv::Mat raw;
  try {
    raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED | cv::IMREAD_ANYDEPTH);
  } catch (const cv::Exception& e) {
    throw DataError("cannot decode image " + path.string() + ": " + e.what());
  }
  if (raw.empty()) throw DataError("unsupported or corrupt image: " + path.string());

  cv::Mat pixels;
  const double scale = raw.depth() == CV_16U ? 1.0 / 257.0 : 1.0;
  if (raw.depth() != CV_8U && raw.depth() != CV_16U) {
    throw DataError("unsupported image depth in " + path.string());
  }
  raw.convertTo(pixels, CV_MAKETYPE(CV_32F, raw.channels()), scale);

  GrayImage out;
  out.width = static_cast<std::size_t>(pixels.cols);
  out.height = static_cast<std::size_t>(pixels.rows);
  out.pixels.resize(out.width * out.height);
  const int channels = pixels.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw DataError("unsupported channel count " + std::to_string(channels) + " in " +
                    path.string());
  }
  for (int y = 0; y < pixels.rows; ++y) {
    const float* row = pixels.ptr<float>(y);
    for (int x = 0; x < pixels.cols; ++x) {
      const float* p = row + x * channels;
      float g = p[0];
      if (channels >= 3) g = 0.299f * p[2] + 0.587f * p[1] + 0.114f * p[0];  // BGR order
      if (channels == 4) {
        const float a = p[3] / 255.0f;
        g = a * g + (1.0f - a) * 255.0f;
      }
      out.pixels[static_cast<std::size_t>(y) * out.width + static_cast<std::size_t>(x)] = g;
    }
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& src, std::size_t width, std::size_t height) {
  if (src.width == 0 || src.height == 0 || width == 0 || height == 0) {
    throw DataError("resize: empty image or target");
  }
  GrayImage out;
  out.width = width;
  out.height = height;
  out.pixels.resize(width * height);
  const double sx = static_cast<double>(src.width) / static_cast<double>(width);
  const double sy = static_cast<double>(src.height) / static_cast<double>(height);
  auto source = [](double pos, std::size_t extent, std::size_t& i0, std::size_t& i1,
                   double& frac) {
    pos = std::clamp(pos, 0.0, static_cast<double>(extent - 1));
    i0 = static_cast<std::size_t>(std::floor(pos));
    i1 = std::min(i0 + 1, extent - 1);
    frac = pos - static_cast<double>(i0);
  };
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t y0, y1;
    double fy;
    source((static_cast<double>(y) + 0.5) * sy - 0.5, src.height, y0, y1, fy);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t x0, x1;
      double fx;
      source((static_cast<double>(x) + 0.5) * sx - 0.5, src.width, x0, x1, fx);
      const double top = src.at(x0, y0) * (1.0 - fx) + src.at(x1, y0) * fx;
      const double bottom = src.at(x0, y1) * (1.0 - fx) + src.at(x1, y1) * fx;
      out.pixels[y * width + x] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
    }
  }
  return out;
}

template <typename T>
Tensor<T> to_ink_tensor(const GrayImage& image, std::size_t height) {
  if (image.width == 0 || image.height == 0) throw DataError("empty image");
  const double scaled = static_cast<double>(image.width) * static_cast<double>(height) /
                        static_cast<double>(image.height);
  const std::size_t width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(scaled)));
  const GrayImage resized = (image.height == height && image.width == width)
                                ? image
                                : resize_bilinear(image, width, height);
  Tensor<T> out({1, height, width});
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double g = std::clamp(static_cast<double>(resized.pixels[i]), 0.0, 255.0);
    out[i] = static_cast<T>((255.0 - g) / 255.0);
  }
  return out;
}

template <typename T>
Tensor<T> load_image(const std::filesystem::path& path, std::size_t height) {
  return to_ink_tensor<T>(decode_image(path), height);
}

template <typename T>
void save_ink_image(const std::filesystem::path& path, const Tensor<T>& ink) {
  const Shape& s = ink.shape();
  if (s.size() != 3 || s[0] != 1) {
    throw ShapeError("save_ink_image: expected [1,H,W], got " + shape_str(s));
  }
  cv::Mat img(static_cast<int>(s[1]), static_cast<int>(s[2]), CV_8UC1);
  for (std::size_t y = 0; y < s[1]; ++y) {
    for (std::size_t x = 0; x < s[2]; ++x) {
      const double v = std::clamp(static_cast<double>(ink[y * s[2] + x]), 0.0, 1.0);
      img.at<unsigned char>(static_cast<int>(y), static_cast<int>(x)) =
          static_cast<unsigned char>(std::lround(255.0 * (1.0 - v)));
    }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), img);
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw DataError("cannot write image " + path.string());
}

template Tensor<float> to_ink_tensor<float>(const GrayImage&, std::size_t);
template Tensor<double> to_ink_tensor<double>(const GrayImage&, std::size_t);
template Tensor<float> load_image<float>(const std::filesystem::path&, std::size_t);
template Tensor<double> load_image<double>(const std::filesystem::path&, std::size_t);
template void save_ink_image<float>(const std::filesystem::path&, const Tensor<float>&);
template void save_ink_image<double>(const std::filesystem::path&, const Tensor<double>&);

}  // namespace r2crnn
