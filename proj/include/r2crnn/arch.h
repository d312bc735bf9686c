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
#include <string>
#include <vector>

namespace r2crnn {

// Network geometry. Every block halves both spatial dims, so one output
// frame covers frame_stride() input columns.
struct ArchConfig {
  std::size_t input_height = 128;
  std::vector<std::size_t> block_channels{32, 64, 128, 256};
  std::size_t rcl_unroll = 2;
  // Separate BN running statistics for every RCL unroll step instead of
  // one shared set. Only eval-mode normalisation differs.
  bool bn_step_statistics = true;
  std::size_t lstm_hidden = 256;
  std::size_t lstm_layers = 2;
  std::size_t num_classes = 0;  // vocabulary size + blank

  // Throws ConfigError on a violated invariant.
  void validate() const;

  std::size_t frame_stride() const;
  std::size_t feature_height() const { return input_height / frame_stride(); }
  std::size_t sequence_features() const;
  std::size_t blank() const { return num_classes - 1; }

  // "key=value" lines; parse() is the inverse of to_text().
  std::string to_text() const;
  static ArchConfig parse(const std::string& text);

  bool operator==(const ArchConfig&) const = default;
};

// Number of lattice frames for an image of `width` pixels.
std::size_t count_frames(std::size_t width, std::size_t frame_stride = 16);

// Trainable scalar count, closed form.
std::size_t count_parameters(const ArchConfig& arch);

}  // namespace r2crnn
