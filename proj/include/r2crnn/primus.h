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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "r2crnn/ctc.h"
#include "r2crnn/tensor.h"

namespace r2crnn {

enum class Encoding { kSemantic, kAgnostic };
enum class Condition { kClean, kDistorted };

std::string_view to_string(Encoding e);
std::string_view to_string(Condition c);
Encoding parse_encoding_name(const std::string& name);
Condition parse_condition_name(const std::string& name);

// One staff image with its two ground-truth transcriptions.
struct Incipit {
  std::string id;
  std::filesystem::path clean_image;
  std::optional<std::filesystem::path> distorted_image;
  std::vector<std::string> semantic;
  std::vector<std::string> agnostic;

  const std::vector<std::string>& tokens(Encoding e) const {
    return e == Encoding::kSemantic ? semantic : agnostic;
  }
  // Throws DataError when the distorted image is requested but absent.
  const std::filesystem::path& image(Condition c) const;
};

// Splits one encoding line on runs of tabs/spaces. Throws DataError
// mentioning `source` when the line holds no token.
std::vector<std::string> parse_encoding(std::string_view line, std::string_view source);

// Lexicographically ordered token set; ids are [0, V) and the CTC blank
// is V.
class Vocabulary {
 public:
  Vocabulary() = default;
  static Vocabulary build(std::span<const std::vector<std::string>> corpus);
  // Tokens must already be sorted and unique.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t blank() const { return tokens_.size(); }
  std::size_t num_classes() const { return tokens_.size() + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const;

  // Unknown tokens raise DataError naming the token and `sample_id`.
  LabelSequence encode(std::span<const std::string> tokens, std::string_view sample_id) const;
  std::vector<std::string> decode(std::span<const std::size_t> ids) const;

  // One token per line, newline-terminated; line number = id.
  std::string to_text() const;
  static Vocabulary parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SkippedDirectory {
  std::filesystem::path directory;
  std::string reason;
};

struct CorpusScan {
  std::vector<Incipit> incipits;  // sorted by id
  std::vector<SkippedDirectory> skipped;
};

struct DiscoveryOptions {
  // A file whose stem contains this marker is the distorted variant.
  std::string distorted_marker = "distorted";
};

// root/<id>/<id>.png, root/<id>/<id>.semantic, root/<id>/<id>.agnostic
// and optionally root/<id>/*<marker>*.(png|jpg|jpeg).
CorpusScan discover_corpus(const std::filesystem::path& root, const DiscoveryOptions& opts = {});

struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;

  std::string to_text() const;
  static SplitSpec parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SplitSpec load(const std::filesystem::path& path);

  bool operator==(const SplitSpec&) const = default;
};

// 80/10/10 partition ordered by a seeded hash of each id, so the result
// does not depend on directory enumeration order. Train gets floor(0.8n),
// validation floor(0.1n), test the rest.
SplitSpec make_split(std::vector<std::string> ids, std::uint64_t seed);

template <typename T>
struct Sample {
  std::string id;
  Tensor<T> image;  // [1,H,W] ink
  LabelSequence label;

  std::size_t width() const { return image.dim(2); }
};

template <typename T>
struct Batch {
  Tensor<T> images;  // [B,1,H,Wmax], zero (background) padded
  std::vector<std::size_t> widths;
  std::vector<std::size_t> frames;
  std::vector<LabelSequence> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return ids.size(); }
};

// Throws DataError when the sample cannot be aligned by CTC: it needs
// frames >= label length + adjacent repeats.
template <typename T>
void check_feasible(const Sample<T>& sample, std::size_t frame_stride = 16);

template <typename T>
Batch<T> make_batch(std::span<const Sample<T>> samples, std::size_t frame_stride = 16);

// Consecutive groups of at most `max_batch` samples.
template <typename T>
std::vector<Batch<T>> make_batches(std::span<const Sample<T>> samples, std::size_t max_batch = 16,
                                   std::size_t frame_stride = 16);

// Loads the images of `incipits` under `condition` and encodes their
// labels with `vocab`.
template <typename T>
std::vector<Sample<T>> load_samples(std::span<const Incipit> incipits, Encoding encoding,
                                    Condition condition, const Vocabulary& vocab,
                                    std::size_t height = 128);

}  // namespace r2crnn
