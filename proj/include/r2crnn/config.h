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
#include <string>
#include <vector>

#include "r2crnn/arch.h"
#include "r2crnn/primus.h"
#include "r2crnn/synth.h"
#include "r2crnn/trainer.h"

namespace r2crnn {

// Flat key=value run description shared by every command. Every key has a
// default; unknown keys are rejected.
struct RunConfig {
  // Data source: a corpus root, or the synthetic generator.
  std::filesystem::path dataset;
  bool synth = false;
  std::size_t synth_count = 32;
  std::size_t synth_classes = 8;
  std::size_t synth_max_label = 6;
  Encoding encoding = Encoding::kSemantic;
  Condition condition = Condition::kClean;       // training images
  Condition eval_condition = Condition::kClean;  // evaluation images
  std::string distorted_marker = "distorted";

  std::uint64_t seed = 7;
  double lr = 1e-3;
  std::size_t max_epochs = 300;
  std::size_t batch_size = 16;
  double clip_norm = 5.0;
  bool stop_on_perfect = false;

  ArchConfig arch;  // num_classes is taken from the vocabulary

  std::filesystem::path out_dir = "out";
  std::filesystem::path checkpoint;  // default <out_dir>/best.ckpt
  std::filesystem::path split_file;  // default <out_dir>/split.txt
  std::filesystem::path resume;      // checkpoint to continue training from

  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  // Documented key list, in to_text() order.
  static std::vector<std::string> keys();

  std::filesystem::path checkpoint_path() const;
  std::filesystem::path split_path() const;
  SynthOptions synth_options() const;
  TrainOptions train_options() const;
};

}  // namespace r2crnn
