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
#include <filesystem>
#include <vector>

#include "r2crnn/tensor.h"

namespace r2crnn {

// 8-bit style intensities in [0, 255], row-major, 255 = white background.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

// PNG, JPEG or PGM. Colour is reduced with luma weights
// 0.299 R + 0.587 G + 0.114 B; alpha is composited over white.
GrayImage decode_image(const std::filesystem::path& path);

// Pixel-centre aligned bilinear interpolation.
GrayImage resize_bilinear(const GrayImage& src, std::size_t width, std::size_t height);

// Aspect-preserving resize to `height`, then ink = (255 - g) / 255.
// Returns [1, height, W].
template <typename T>
Tensor<T> to_ink_tensor(const GrayImage& image, std::size_t height);

template <typename T>
Tensor<T> load_image(const std::filesystem::path& path, std::size_t height = 128);

// Writes an ink tensor [1,H,W] back as an 8-bit grayscale image.
template <typename T>
void save_ink_image(const std::filesystem::path& path, const Tensor<T>& ink);

}  // namespace r2crnn
