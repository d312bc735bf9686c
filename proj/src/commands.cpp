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

#include "r2crnn/commands.h"

#include <chrono>
#include <fstream>
#include <cstdio>
#include <map>

#include "r2crnn/checkpoint.h"
#include "r2crnn/errors.h"
#include "r2crnn/image.h"
#include "r2crnn/selfcheck.h"
#include "r2crnn/synth.h"
#include "r2crnn/text.h"

namespace r2crnn {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitFailure;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw DataError("cannot write " + path.string());
}

void make_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw DataError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
}

CorpusScan scan_corpus(const RunConfig& cfg, std::ostream& log) {
  if (cfg.dataset.empty()) throw ConfigError("no data source: set dataset=PATH or synth=true");
  CorpusScan scan = discover_corpus(cfg.dataset, {cfg.distorted_marker});
  for (const auto& s : scan.skipped) {
    log << "warning: skipped " << s.directory.string() << ": " << s.reason << '\n';
  }
  if (scan.incipits.empty()) throw DataError("no usable incipits under " + cfg.dataset.string());
  return scan;
}

std::vector<Incipit> pick(const CorpusScan& scan, const std::vector<std::string>& ids) {
  std::map<std::string, const Incipit*> by_id;
  for (const auto& inc : scan.incipits) by_id.emplace(inc.id, &inc);
  std::vector<Incipit> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("split lists incipit " + id + " which is not in the corpus");
    out.push_back(*it->second);
  }
  return out;
}

// Split from cfg.split_path() when present, otherwise a fresh one.
SplitSpec obtain_split(const RunConfig& cfg, const CorpusScan& scan, std::ostream& log) {
  if (std::filesystem::exists(cfg.split_path())) {
    log << "using split " << cfg.split_path().string() << '\n';
    return SplitSpec::load(cfg.split_path());
  }
  std::vector<std::string> ids;
  for (const auto& inc : scan.incipits) ids.push_back(inc.id);
  return make_split(std::move(ids), cfg.seed);
}

Vocabulary train_vocabulary(const std::vector<Incipit>& train, Encoding encoding) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& inc : train) corpus.push_back(inc.tokens(encoding));
  return Vocabulary::build(corpus);
}

ArchConfig arch_for(const RunConfig& cfg, const Vocabulary& vocab) {
  ArchConfig arch = cfg.arch;
  arch.num_classes = vocab.num_classes();
  arch.validate();
  return arch;
}

}  // namespace

void cmd_prepare(const RunConfig& cfg, std::ostream& log) {
  const CorpusScan scan = scan_corpus(cfg, log);
  const SplitSpec split = obtain_split(cfg, scan, log);
  const Vocabulary vocab = train_vocabulary(pick(scan, split.train), cfg.encoding);
  make_out_dir(cfg);
  split.save(cfg.out_dir / "split.txt");
  vocab.save(cfg.out_dir / "vocab.txt");
  log << scan.incipits.size() << " incipits (" << scan.skipped.size() << " skipped); split "
      << split.train.size() << "/" << split.validation.size() << "/" << split.test.size()
      << "; " << vocab.size() << " " << to_string(cfg.encoding) << " tokens\n";
}

std::vector<EpochRecord> cmd_train(const RunConfig& cfg, std::ostream& log) {
  std::vector<Sample<float>> train, validation;
  Vocabulary vocab;
  SplitSpec split;
  std::string encoding, condition;
  if (cfg.synth) {
    train = synth_generate<float>(cfg.synth_options());
    vocab = synth_vocabulary(cfg.synth_classes);
    // The synthetic task is memorisation, so the training set doubles as
    // the validation set.
    validation = train;
    split.seed = cfg.seed;
    for (const auto& s : train) split.train.push_back(s.id);
    encoding = "synth";
    condition = "synth";
  } else {
    const CorpusScan scan = scan_corpus(cfg, log);
    split = obtain_split(cfg, scan, log);
    const std::vector<Incipit> train_inc = pick(scan, split.train);
    vocab = train_vocabulary(train_inc, cfg.encoding);
    const std::size_t height = cfg.arch.input_height;
    train = load_samples<float>(train_inc, cfg.encoding, cfg.condition, vocab, height);
    validation = load_samples<float>(pick(scan, split.validation), cfg.encoding, cfg.condition,
                                     vocab, height);
    encoding = to_string(cfg.encoding);
    condition = to_string(cfg.condition);
  }
  const ArchConfig arch = arch_for(cfg, vocab);

  Checkpoint start;
  if (!cfg.resume.empty()) {
    start = load_checkpoint(cfg.resume);
    if (!(start.arch == arch)) throw ConfigError("resume checkpoint has a different architecture");
    if (!(start.vocab == vocab)) throw DataError("resume checkpoint has a different vocabulary");
    log << "resuming after epoch " << start.state.epoch << '\n';
  } else {
    start.arch = arch;
    start.vocab = vocab;
    start.params = init_params<float>(arch, cfg.seed);
    start.state.seed = cfg.seed;
    start.state.encoding = encoding;
    start.state.condition = condition;
  }

  make_out_dir(cfg);
  write_text(cfg.out_dir / "config.txt", cfg.to_text());
  vocab.save(cfg.out_dir / "vocab.txt");
  split.save(cfg.out_dir / "split.txt");

  log << "training on " << train.size() << " samples, validating on " << validation.size()
      << ", " << count_parameters(arch) << " parameters\n";
  TrainOptions options = cfg.train_options();
  const auto t0 = std::chrono::steady_clock::now();
  options.on_epoch = [&](const EpochRecord& r) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %zu  loss %.5f  val %s  %.1fs\n", r.epoch, r.train_loss,
                  format_cell(r.val_ser, r.val_er).c_str(), secs);
    log << buf << std::flush;
  };
  Trainer trainer(std::move(start), options);
  std::vector<EpochRecord> records = trainer.fit(train, validation);
  const TrainingState& st = trainer.checkpoint().state;
  log << "best validation SER " << format_double(st.best_ser) << " at epoch " << st.best_epoch
      << '\n';
  return records;
}

EvalReport cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  std::vector<Sample<float>> samples;
  std::string eval_condition;
  if (cfg.synth) {
    if (!(ckpt.vocab == synth_vocabulary(cfg.synth_classes))) {
      throw DataError("checkpoint vocabulary does not match the synthetic classes");
    }
    samples = synth_generate<float>(cfg.synth_options());
    eval_condition = "synth";
  } else {
    if (!ckpt.state.encoding.empty() && ckpt.state.encoding != to_string(cfg.encoding)) {
      throw DataError("checkpoint was trained on " + ckpt.state.encoding +
                      " labels, evaluation requests " + std::string(to_string(cfg.encoding)));
    }
    const CorpusScan scan = scan_corpus(cfg, log);
    if (!std::filesystem::exists(cfg.split_path())) {
      throw DataError("split file not found: " + cfg.split_path().string());
    }
    const SplitSpec split = SplitSpec::load(cfg.split_path());
    samples = load_samples<float>(pick(scan, split.test), cfg.encoding, cfg.eval_condition,
                                  ckpt.vocab, ckpt.arch.input_height);
    eval_condition = to_string(cfg.eval_condition);
  }
  if (samples.empty()) throw DataError("nothing to evaluate");
  R2Crnn<float> model(ckpt.arch, ckpt.params);
  EvalReport report = evaluate_samples(model, samples);
  report.train_condition = ckpt.state.condition;
  report.eval_condition = eval_condition;
  report.encoding = ckpt.state.encoding;
  report.seed = cfg.seed;
  make_out_dir(cfg);
  report.save(cfg.out_dir / "report.json", cfg.out_dir / "report.txt");
  return report;
}

std::vector<std::string> cmd_transcribe(const std::filesystem::path& checkpoint,
                                        const std::filesystem::path& image) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  const Tensor<float> ink = load_image<float>(image, ckpt.arch.input_height);
  R2Crnn<float> model(ckpt.arch, ckpt.params);
  return ckpt.vocab.decode(greedy_decode(model.infer(ink)));
}

bool cmd_selfcheck(std::ostream& out, std::size_t ctc_instances) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<CheckResult> results = gradient_suite();
  for (auto& r : ctc_suite(ctc_instances)) results.push_back(std::move(r));
  bool ok = true;
  for (const auto& r : results) {
    out << format_check(r) << '\n';
    ok = ok && r.passed();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s in %.1fs\n", ok ? "all checks passed" : "self-check FAILED",
                secs);
  out << buf;
  return ok;
}

}  // namespace r2crnn
