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
#include <span>
#include <string>
#include <vector>

#include "r2crnn/ctc.h"

namespace r2crnn {

// Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct ScoredPair {
  LabelSequence reference;
  LabelSequence prediction;
};

// 100 * sum(edits) / sum(reference lengths). Throws DataError on an empty
// pair list or a zero-length reference.
double compute_ser(std::span<const ScoredPair> pairs);
// Mean of the per-pair ratios.
double compute_ser_macro(std::span<const ScoredPair> pairs);
// 100 * (pairs with at least one edit) / pairs.
double compute_er(std::span<const ScoredPair> pairs);

// "SER/ER" with two and one decimals, e.g. "0.59/16.2".
std::string format_cell(double ser, double er);

struct SampleRecord {
  std::string id;
  std::size_t edits = 0;
  std::size_t reference_length = 0;
  bool exact = true;
};

struct EvalReport {
  double ser = 0.0;        // micro
  double ser_macro = 0.0;
  double er = 0.0;
  std::vector<SampleRecord> records;
  std::string train_condition;
  std::string eval_condition;
  std::string encoding;
  std::uint64_t seed = 0;

  std::string cell() const { return format_cell(ser, er); }
  std::string to_json() const;
  std::string to_text() const;
  void save(const std::filesystem::path& json_path, const std::filesystem::path& text_path) const;
};

// `ids` may be empty, in which case records are numbered.
EvalReport evaluate_pairs(std::span<const ScoredPair> pairs, std::span<const std::string> ids = {});

}  // namespace r2crnn
