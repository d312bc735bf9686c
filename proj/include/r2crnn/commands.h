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

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "r2crnn/config.h"
#include "r2crnn/metrics.h"
#include "r2crnn/trainer.h"

namespace r2crnn {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitSelfCheck = 5,
};

// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

// Scans the corpus and writes <out_dir>/split.txt and <out_dir>/vocab.txt.
void cmd_prepare(const RunConfig& cfg, std::ostream& log);

// Trains from the synthetic generator (cfg.synth) or a corpus root and
// writes best.ckpt, last.ckpt, losses.tsv, vocab.txt, split.txt and
// config.txt under cfg.out_dir.
std::vector<EpochRecord> cmd_train(const RunConfig& cfg, std::ostream& log);

// Transcribes the test split (the whole generated set for synth runs)
// under cfg.eval_condition with the checkpoint at cfg.checkpoint_path()
// and writes report.json and report.txt under cfg.out_dir.
EvalReport cmd_evaluate(const RunConfig& cfg, std::ostream& log);

// Greedy transcription of one image.
std::vector<std::string> cmd_transcribe(const std::filesystem::path& checkpoint,
                                        const std::filesystem::path& image);

// Gradient and CTC suites; true when every check passes.
bool cmd_selfcheck(std::ostream& out, std::size_t ctc_instances = 200);

}  // namespace r2crnn
