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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "r2crnn/commands.h"
#include "r2crnn/errors.h"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value run configuration file");
  cmd->add_option("--set", c.sets, "override one key, key=value (repeatable)");
  cmd->add_option("--out-dir", c.out_dir, "output directory");
}

// Config file first, then --set overrides, then dedicated flags.
r2crnn::RunConfig build_config(const Common& c,
                               const std::vector<std::pair<std::string, std::string>>& flags) {
  r2crnn::RunConfig cfg;
  if (!c.config.empty()) cfg = r2crnn::RunConfig::load(c.config);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw r2crnn::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [key, value] : flags) cfg.set(key, value);
  if (!c.out_dir.empty()) cfg.set("out_dir", c.out_dir);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical music recognition for single-staff images"};
  app.require_subcommand(1);

  Common common;
  bool synth = false;
  std::string seed, dataset, encoding, condition, eval_condition, resume, checkpoint, max_epochs;
  std::size_t instances = 200;
  std::string image;

  auto* prepare = app.add_subcommand("prepare", "scan a corpus, write split.txt and vocab.txt");
  auto* train = app.add_subcommand("train", "train a model");
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test split");
  auto* transcribe = app.add_subcommand("transcribe", "print the tokens of one image");
  auto* selfcheck = app.add_subcommand("selfcheck", "verify gradients and the CTC loss");

  for (auto* cmd : {prepare, train, evaluate}) {
    add_common(cmd, common);
    cmd->add_option("--seed", seed, "seed for splits, initialisation and shuffling");
    cmd->add_option("--dataset", dataset, "corpus root directory");
    cmd->add_option("--encoding", encoding, "semantic or agnostic");
  }
  for (auto* cmd : {train, evaluate}) {
    cmd->add_flag("--synth", synth, "use the synthetic generator instead of a corpus");
  }
  train->add_option("--condition", condition, "training images: clean or distorted");
  train->add_option("--resume", resume, "continue from this checkpoint");
  train->add_option("--max-epochs", max_epochs, "total epoch budget");
  evaluate->add_option("--eval-condition", eval_condition, "evaluation images: clean or distorted");
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint to evaluate (default <out-dir>/best.ckpt)");
  transcribe->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  transcribe->add_option("image", image, "image file")->required();
  selfcheck->add_option("--ctc-instances", instances, "random CTC instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? r2crnn::kExitOk : r2crnn::kExitConfig;
  }

  try {
    std::vector<std::pair<std::string, std::string>> flags;
    auto flag = [&flags](const char* key, const std::string& value) {
      if (!value.empty()) flags.emplace_back(key, value);
    };
    if (synth) flags.emplace_back("synth", "true");
    flag("seed", seed);
    flag("dataset", dataset);
    flag("encoding", encoding);
    flag("condition", condition);
    flag("eval_condition", eval_condition);
    flag("resume", resume);
    flag("checkpoint", checkpoint);
    flag("max_epochs", max_epochs);

    if (*prepare) {
      r2crnn::cmd_prepare(build_config(common, flags), std::cerr);
    } else if (*train) {
      r2crnn::cmd_train(build_config(common, flags), std::cerr);
    } else if (*evaluate) {
      const auto report = r2crnn::cmd_evaluate(build_config(common, flags), std::cerr);
      std::cout << report.cell() << '\n';
    } else if (*transcribe) {
      const auto tokens = r2crnn::cmd_transcribe(checkpoint, image);
      std::string line;
      for (std::size_t i = 0; i < tokens.size(); ++i) line += (i ? "\t" : "") + tokens[i];
      std::cout << line << '\n';
    } else if (*selfcheck) {
      return r2crnn::cmd_selfcheck(std::cout, instances) ? r2crnn::kExitOk
                                                         : r2crnn::kExitSelfCheck;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return r2crnn::exit_code_for(e);
  }
  return r2crnn::kExitOk;
}
