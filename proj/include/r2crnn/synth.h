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
#include <cstdint>
#include <vector>

#include "r2crnn/ctc.h"
#include "r2crnn/primus.h"
#include "r2crnn/tensor.h"

namespace r2crnn {

inline constexpr std::size_t kSynthGlyphHeight = 128;
inline constexpr std::size_t kSynthGlyphWidth = 32;
inline constexpr std::size_t kSynthMaxClasses = 32;

struct SynthOptions {
  std::uint64_t seed = 7;
  std::size_t count = 32;
  std::size_t classes = 8;
  std::size_t max_label_length = 6;
};

// Tokens "g00", "g01", ... so lexicographic order equals class order.
Vocabulary synth_vocabulary(std::size_t classes);

// Class k: a blob in row band k % 8, drawn in style k / 8
// (solid, solid with stem, hollow, twin bars). Returns [1,128,32] ink.
template <typename T>
Tensor<T> synth_glyph(std::size_t cls);

// Glyphs of `label` side by side: [1,128,32*len].
template <typename T>
Tensor<T> synth_render(const LabelSequence& label);

// Label lengths are uniform in [1, max_label_length], classes uniform in
// [0, classes). Sample ids are "synth-0000", "synth-0001", ...
template <typename T>
std::vector<Sample<T>> synth_generate(const SynthOptions& opts);

}  // namespace r2crnn
