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

#include "r2crnn/synth.h"

#include <cstdio>
#include <random>
#include <string>

#include "r2crnn/errors.h"

namespace r2crnn {

namespace {

void check_classes(std::size_t classes) {
  if (classes == 0 || classes > kSynthMaxClasses) {
    throw ConfigError("synth: class count must be in [1, " + std::to_string(kSynthMaxClasses) +
                      "], got " + std::to_string(classes));
  }
}

// Unbiased draw in [0, n) that does not depend on the standard library's
// distribution implementation.
std::size_t draw(std::mt19937_64& gen, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = gen();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

}  // namespace

Vocabulary synth_vocabulary(std::size_t classes) {
  check_classes(classes);
  std::vector<std::string> tokens;
  for (std::size_t k = 0; k < classes; ++k) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "g%02zu", k);
    tokens.emplace_back(buf);
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

template <typename T>
Tensor<T> synth_glyph(std::size_t cls) {
  check_classes(cls + 1);
  constexpr std::size_t H = kSynthGlyphHeight, W = kSynthGlyphWidth;
  Tensor<T> out({1, H, W});
  auto fill = [&](std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) out[y * W + x] = T(1);
    }
  };
  const std::size_t top = (cls % 8) * 16 + 2, bottom = top + 12;
  switch (cls / 8) {
    case 0:
      fill(top, bottom, 8, 24);
      break;
    case 1:
      fill(top, bottom, 8, 24);
      fill(0, H, 21, 24);
      break;
    case 2:
      fill(top, bottom, 8, 24);
      for (std::size_t y = top + 3; y < bottom - 3; ++y) {
        for (std::size_t x = 11; x < 21; ++x) out[y * W + x] = T(0);
      }
      break;
    default:
      fill(top, bottom, 8, 12);
      fill(top, bottom, 20, 24);
      break;
  }
  return out;
}

template <typename T>
Tensor<T> synth_render(const LabelSequence& label) {
  if (label.empty()) throw DataError("synth_render: empty label");
  constexpr std::size_t H = kSynthGlyphHeight, W = kSynthGlyphWidth;
  const std::size_t width = W * label.size();
  Tensor<T> out({1, H, width});
  for (std::size_t i = 0; i < label.size(); ++i) {
    const Tensor<T> glyph = synth_glyph<T>(label[i]);
    for (std::size_t y = 0; y < H; ++y) {
      std::copy_n(glyph.data() + y * W, W, out.data() + y * width + i * W);
    }
  }
  return out;
}

template <typename T>
std::vector<Sample<T>> synth_generate(const SynthOptions& opts) {
  check_classes(opts.classes);
  if (opts.max_label_length == 0) throw ConfigError("synth: max label length must be positive");
  std::mt19937_64 gen(opts.seed);
  std::vector<Sample<T>> out;
  out.reserve(opts.count);
  for (std::size_t i = 0; i < opts.count; ++i) {
    Sample<T> s;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04zu", i);
    s.id = id;
    const std::size_t len = 1 + draw(gen, opts.max_label_length);
    for (std::size_t j = 0; j < len; ++j) s.label.push_back(draw(gen, opts.classes));
    s.image = synth_render<T>(s.label);
    out.push_back(std::move(s));
  }
  return out;
}

template Tensor<float> synth_glyph<float>(std::size_t);
template Tensor<double> synth_glyph<double>(std::size_t);
template Tensor<float> synth_render<float>(const LabelSequence&);
template Tensor<double> synth_render<double>(const LabelSequence&);
template std::vector<Sample<float>> synth_generate<float>(const SynthOptions&);
template std::vector<Sample<double>> synth_generate<double>(const SynthOptions&);

}  // namespace r2crnn
