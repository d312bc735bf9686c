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

#include "r2crnn/arch.h"

#include <sstream>

#include "r2crnn/errors.h"
#include "r2crnn/text.h"

namespace r2crnn {

void ArchConfig::validate() const {
  if (block_channels.empty()) throw ConfigError("arch: at least one block required");
  for (std::size_t c : block_channels) {
    if (c == 0) throw ConfigError("arch: block channel count must be positive");
  }
  if (input_height % frame_stride() != 0) {
    throw ConfigError("arch: input height " + std::to_string(input_height) +
                      " is not divisible by " + std::to_string(frame_stride()));
  }
  if (lstm_hidden == 0) throw ConfigError("arch: lstm hidden size must be positive");
  if (lstm_layers == 0) throw ConfigError("arch: at least one lstm layer required");
  if (num_classes < 2) {
    throw ConfigError("arch: num_classes must be >= 2 (vocabulary + blank), got " +
                      std::to_string(num_classes));
  }
}

std::size_t ArchConfig::frame_stride() const {
  return std::size_t{1} << block_channels.size();
}

std::size_t ArchConfig::sequence_features() const {
  return block_channels.back() * feature_height();
}

std::string ArchConfig::to_text() const {
  std::ostringstream os;
  os << "input_height=" << input_height << '\n';
  os << "block_channels=" << join_sizes(block_channels) << '\n';
  os << "rcl_unroll=" << rcl_unroll << '\n';
  os << "bn_step_statistics=" << (bn_step_statistics ? "true" : "false") << '\n';
  os << "lstm_hidden=" << lstm_hidden << '\n';
  os << "lstm_layers=" << lstm_layers << '\n';
  os << "num_classes=" << num_classes << '\n';
  return os.str();
}

ArchConfig ArchConfig::parse(const std::string& text) {
  ArchConfig arch;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "input_height") {
      arch.input_height = parse_size(value, key);
    } else if (key == "block_channels") {
      arch.block_channels = parse_size_list(value, key);
    } else if (key == "rcl_unroll") {
      arch.rcl_unroll = parse_size(value, key);
    } else if (key == "bn_step_statistics") {
      arch.bn_step_statistics = parse_bool(value, key);
    } else if (key == "lstm_hidden") {
      arch.lstm_hidden = parse_size(value, key);
    } else if (key == "lstm_layers") {
      arch.lstm_layers = parse_size(value, key);
    } else if (key == "num_classes") {
      arch.num_classes = parse_size(value, key);
    } else {
      throw ConfigError("arch: unknown key '" + key + "'");
    }
  }
  return arch;
}

std::size_t count_frames(std::size_t width, std::size_t frame_stride) {
  if (width < frame_stride) {
    throw DataError("image too narrow: width " + std::to_string(width) +
                    " is below the frame stride " + std::to_string(frame_stride));
  }
  return width / frame_stride;
}

std::size_t count_parameters(const ArchConfig& arch) {
  std::size_t total = 0;
  std::size_t in = 1;
  for (std::size_t c : arch.block_channels) {
    total += c * in + c;                // 1x1 mapping
    total += 2 * (9 * c * c + c + 2 * c);  // two RCL units: conv + BN affine
    in = c;
  }
  const std::size_t h = arch.lstm_hidden;
  std::size_t n = arch.sequence_features();
  for (std::size_t l = 0; l < arch.lstm_layers; ++l) {
    total += 2 * (4 * h * n + 4 * h * h + 4 * h);
    n = 2 * h;
  }
  total += arch.num_classes * n + arch.num_classes;
  return total;
}

}  // namespace r2crnn
