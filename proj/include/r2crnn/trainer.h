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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "r2crnn/checkpoint.h"
#include "r2crnn/metrics.h"
#include "r2crnn/model.h"
#include "r2crnn/optim.h"
#include "r2crnn/primus.h"

namespace r2crnn {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_ser = 0.0;
  double val_er = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

// "epoch<TAB>train_loss<TAB>val_ser<TAB>val_er" with round-trip exact numbers.
std::string format_epoch_record(const EpochRecord& r);
inline constexpr const char* kLossCurveHeader = "epoch\ttrain_loss\tval_ser\tval_er";

struct TrainOptions {
  AdamOptions adam;
  std::size_t max_epochs = 300;  // total, including epochs done before a resume
  std::size_t batch_size = 16;
  double clip_norm = 5.0;        // <= 0 disables clipping
  bool stop_on_perfect = false;  // stop once validation SER and ER are both zero
  std::filesystem::path out_dir; // best.ckpt, last.ckpt, losses.tsv; empty = no files
  std::function<void(const EpochRecord&)> on_epoch;
};

// Mean CTC loss of a batch, built in train mode. Returns a scalar node.
template <typename T>
Var batch_loss(Graph<T>& g, R2Crnn<T>& model, const Batch<T>& batch);

// Greedy transcription of each sample with eval-mode statistics.
std::vector<LabelSequence> transcribe_samples(R2Crnn<float>& model,
                                              std::span<const Sample<float>> samples);

EvalReport evaluate_samples(R2Crnn<float>& model, std::span<const Sample<float>> samples);

// Visiting order of `count` samples in a given epoch; a pure function of
// (seed, epoch).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t epoch, std::size_t count);

class Trainer {
 public:
  // Continues from `start`; a checkpoint without optimizer state starts a
  // fresh run whose shuffle seed is start.state.seed.
  Trainer(Checkpoint start, TrainOptions options);

  const Checkpoint& checkpoint() const { return ckpt_; }

  // One pass over `train` followed by validation on `validation`.
  // Throws NumericError on a non-finite loss or gradient; parameters are
  // left as they were before the failing step.
  EpochRecord run_epoch(std::span<const Sample<float>> train,
                        std::span<const Sample<float>> validation);

  // Epochs until options.max_epochs (or a perfect validation score when
  // requested). Writes last.ckpt after every epoch and best.ckpt whenever
  // validation SER improves. Returns the records of this call.
  std::vector<EpochRecord> fit(std::span<const Sample<float>> train,
                               std::span<const Sample<float>> validation);

 private:
  void prepare_loss_curve() const;
  void append_loss_curve(const EpochRecord& r) const;

  Checkpoint ckpt_;
  TrainOptions options_;
};

}  // namespace r2crnn
