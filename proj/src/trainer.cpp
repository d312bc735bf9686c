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

#include "r2crnn/trainer.h"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "r2crnn/errors.h"
#include "r2crnn/text.h"

namespace r2crnn {

std::string format_epoch_record(const EpochRecord& r) {
  return std::to_string(r.epoch) + '\t' + format_double(r.train_loss) + '\t' +
         format_double(r.val_ser) + '\t' + format_double(r.val_er);
}

template <typename T>
Var batch_loss(Graph<T>& g, R2Crnn<T>& model, const Batch<T>& batch) {
  const Var images = g.input(batch.images);
  const std::vector<Var> lattices = model.forward(g, images, batch.widths, Mode::kTrain);
  const std::size_t blank = model.arch().blank();
  Var total = ctc_loss(g, lattices[0], batch.labels[0], blank);
  for (std::size_t b = 1; b < lattices.size(); ++b) {
    total = add(g, total, ctc_loss(g, lattices[b], batch.labels[b], blank));
  }
  return scale(g, total, T(1) / static_cast<T>(lattices.size()));
}

std::vector<LabelSequence> transcribe_samples(R2Crnn<float>& model,
                                              std::span<const Sample<float>> samples) {
  std::vector<LabelSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(greedy_decode(model.infer(s.image)));
  return out;
}

EvalReport evaluate_samples(R2Crnn<float>& model, std::span<const Sample<float>> samples) {
  const std::vector<LabelSequence> predictions = transcribe_samples(model, samples);
  std::vector<ScoredPair> pairs;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    pairs.push_back({samples[i].label, predictions[i]});
    ids.push_back(samples[i].id);
  }
  return evaluate_pairs(pairs, ids);
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t epoch, std::size_t count) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 gen(seq);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates with an explicit reduction so the order is the same on
  // every standard library.
  for (std::size_t i = count; i > 1; --i) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % i;
    std::uint64_t v;
    do {
      v = gen();
    } while (v >= limit);
    std::swap(order[i - 1], order[v % i]);
  }
  return order;
}

Trainer::Trainer(Checkpoint start, TrainOptions options)
    : ckpt_(std::move(start)), options_(std::move(options)) {
  ckpt_.arch.validate();
  if (ckpt_.arch.num_classes != ckpt_.vocab.num_classes()) {
    throw ConfigError("model has " + std::to_string(ckpt_.arch.num_classes) +
                      " classes but the vocabulary needs " +
                      std::to_string(ckpt_.vocab.num_classes()));
  }
  if (options_.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!ckpt_.adam) {
    ckpt_.adam = AdamState::for_params(ckpt_.params, options_.adam);
  } else {
    ckpt_.adam->options = options_.adam;
  }
}

EpochRecord Trainer::run_epoch(std::span<const Sample<float>> train,
                               std::span<const Sample<float>> validation) {
  if (train.empty()) throw DataError("training set is empty");
  if (validation.empty()) throw DataError("validation set is empty");
  R2Crnn<float> model(ckpt_.arch, ckpt_.params);
  const std::size_t stride = ckpt_.arch.frame_stride();
  const std::uint64_t epoch = ckpt_.state.epoch;
  const std::vector<std::size_t> order = epoch_order(ckpt_.state.seed, epoch, train.size());

  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < order.size(); begin += options_.batch_size) {
    const std::size_t end = std::min(order.size(), begin + options_.batch_size);
    std::vector<Sample<float>> picked;
    for (std::size_t i = begin; i < end; ++i) picked.push_back(train[order[i]]);
    const Batch<float> batch = make_batch<float>(picked, stride);

    Graph<float> g;
    const Var loss = batch_loss(g, model, batch);
    const double value = g.value(loss)[0];
    if (!std::isfinite(value)) {
      throw NumericError("non-finite training loss in epoch " + std::to_string(epoch + 1) +
                         ", step " + std::to_string(ckpt_.state.step + 1));
    }
    g.backward(loss);
    std::vector<Tensor<float>> grads = collect_gradients(g, ckpt_.params);
    clip_grad_norm(grads, options_.clip_norm);
    adam_step(ckpt_.params, grads, *ckpt_.adam);
    ckpt_.state.step += 1;
    loss_sum += value * static_cast<double>(batch.size());
  }

  const EvalReport report = evaluate_samples(model, validation);
  EpochRecord record;
  record.epoch = static_cast<std::size_t>(epoch + 1);
  record.train_loss = loss_sum / static_cast<double>(train.size());
  record.val_ser = report.ser;
  record.val_er = report.er;
  ckpt_.state.epoch = epoch + 1;
  return record;
}

void Trainer::prepare_loss_curve() const {
  const auto path = options_.out_dir / "losses.tsv";
  // Keep the records of epochs already inside the checkpoint and drop any
  // written after it, so a resumed curve matches an unbroken one.
  std::vector<std::string> kept;
  if (ckpt_.state.epoch > 0) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (kept.size() < ckpt_.state.epoch && std::getline(in, line)) kept.push_back(line);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << kLossCurveHeader << '\n';
  for (const auto& l : kept) out << l << '\n';
  if (!out.flush()) throw DataError("cannot write " + path.string());
}

void Trainer::append_loss_curve(const EpochRecord& r) const {
  const auto path = options_.out_dir / "losses.tsv";
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << format_epoch_record(r) << '\n';
  if (!out.flush()) throw DataError("cannot write " + path.string());
}

std::vector<EpochRecord> Trainer::fit(std::span<const Sample<float>> train,
                                      std::span<const Sample<float>> validation) {
  const bool files = !options_.out_dir.empty();
  if (files) {
    std::error_code ec;
    std::filesystem::create_directories(options_.out_dir, ec);
    if (ec) throw DataError("cannot create " + options_.out_dir.string() + ": " + ec.message());
    prepare_loss_curve();
  }
  const std::size_t stride = ckpt_.arch.frame_stride();
  for (const auto& s : train) check_feasible(s, stride);
  for (const auto& s : validation) check_feasible(s, stride);

  std::vector<EpochRecord> records;
  while (ckpt_.state.epoch < options_.max_epochs) {
    const EpochRecord r = run_epoch(train, validation);
    records.push_back(r);
    const bool improved = ckpt_.state.best_ser < 0.0 || r.val_ser < ckpt_.state.best_ser;
    if (improved) {
      ckpt_.state.best_ser = r.val_ser;
      ckpt_.state.best_epoch = r.epoch;
    }
    if (files) {
      append_loss_curve(r);
      if (improved) save_checkpoint(options_.out_dir / "best.ckpt", ckpt_);
      save_checkpoint(options_.out_dir / "last.ckpt", ckpt_);
    }
    if (options_.on_epoch) options_.on_epoch(r);
    if (options_.stop_on_perfect && r.val_ser == 0.0 && r.val_er == 0.0) break;
  }
  return records;
}

template Var batch_loss<float>(Graph<float>&, R2Crnn<float>&, const Batch<float>&);
template Var batch_loss<double>(Graph<double>&, R2Crnn<double>&, const Batch<double>&);

}  // namespace r2crnn
