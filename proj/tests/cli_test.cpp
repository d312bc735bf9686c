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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "r2crnn/image.h"
#include "r2crnn/synth.h"
#include "test_util.h"

namespace r2crnn {
namespace {

using testing::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

// Runs a command line, capturing stdout; stderr goes to the test log.
RunResult run(const std::string& cmd) {
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string cli(const std::string& args) { return std::string(R2CRNN_CLI) + " " + args; }

// Small network so CLI runs finish in well under a second per epoch.
const std::string kTinyArch =
    "--set block_channels=2,2,2,2 --set lstm_hidden=4 --set synth_count=4 "
    "--set synth_classes=3 --set synth_max_label=2 --set batch_size=4";

TEST(Cli, UnknownConfigKeyIsConfigError) {
  TempDir dir("cli");
  EXPECT_EQ(run(cli("train --synth --set no_such_key=1 --out-dir " + dir.path().string()))
                .exit_code,
            2);
  std::ofstream(dir / "bad.conf") << "lr=0.001\nbogus=3\n";
  EXPECT_EQ(run(cli("train --synth --config " + (dir / "bad.conf").string())).exit_code, 2);
  EXPECT_EQ(run(cli("train --no-such-flag")).exit_code, 2);
}

TEST(Cli, MissingDatasetIsDataError) {
  TempDir dir("cli");
  EXPECT_EQ(run(cli("train --dataset " + (dir / "absent").string() + " --out-dir " +
                    dir.path().string()))
                .exit_code,
            3);
}

TEST(Cli, SelfCheckPasses) {
  const RunResult r = run(cli("selfcheck --ctc-instances 50"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS  conv2d"), std::string::npos);
}

TEST(Cli, SelfCheckCatchesConvBackwardMutation) {
  const RunResult r = run(std::string(R2CRNN_MUTANT_CLI) + " selfcheck --ctc-instances 20");
  EXPECT_EQ(r.exit_code, 5);
  EXPECT_NE(r.out.find("FAIL  conv2d 3x3"), std::string::npos);
  EXPECT_NE(r.out.find("PASS  ctc vs path enumeration"), std::string::npos);
}

TEST(Cli, SynthTrainEvaluateTranscribe) {
  TempDir dir("cli");
  const std::string out = " --out-dir " + dir.path().string();
  ASSERT_EQ(run(cli("train --synth --seed 7 --max-epochs 2 " + kTinyArch + out)).exit_code, 0);
  for (const char* f : {"best.ckpt", "last.ckpt", "losses.tsv", "config.txt", "vocab.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }

  const RunResult eval = run(cli("evaluate --synth --seed 7 " + kTinyArch + out));
  ASSERT_EQ(eval.exit_code, 0);
  const auto report = nlohmann::json::parse(std::ifstream(dir / "report.json"));
  EXPECT_EQ(eval.out, report["cell"].get<std::string>() + "\n");
  EXPECT_EQ(report["seed"], 7);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.txt"));

  save_ink_image(dir / "blank.png", Tensor<float>({1, 128, 96}, 0.0f));
  const RunResult blank =
      run(cli("transcribe --checkpoint " + (dir / "best.ckpt").string() + " " +
              (dir / "blank.png").string()));
  EXPECT_EQ(blank.exit_code, 0);
  EXPECT_EQ(blank.out.back(), '\n');

  std::ofstream(dir / "corrupt.png") << "garbage";
  EXPECT_NE(run(cli("transcribe --checkpoint " + (dir / "best.ckpt").string() + " " +
                    (dir / "corrupt.png").string()))
                .exit_code,
            0);
  EXPECT_EQ(run(cli("transcribe --checkpoint " + (dir / "missing.ckpt").string() + " " +
                    (dir / "blank.png").string()))
                .exit_code,
            3);
}

// root/<id>/<id>.png plus both encodings; no distorted images.
void write_corpus(const std::filesystem::path& root, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::string id = "inc" + std::to_string(100 + i);
    std::filesystem::create_directories(root / id);
    const LabelSequence label{i % 3, (i + 1) % 3};
    save_ink_image(root / id / (id + ".png"), synth_render<float>(label));
    std::ofstream(root / id / (id + ".semantic")) << "note-" << label[0] << "\tnote-" << label[1]
                                                  << '\n';
    std::ofstream(root / id / (id + ".agnostic")) << "glyph." << label[0] << " glyph."
                                                  << label[1] << '\n';
  }
}

TEST(Cli, DatasetConditionsAndEncodings) {
  TempDir dir("cli");
  write_corpus(dir / "corpus", 20);
  const std::string common = " --dataset " + (dir / "corpus").string() + " --out-dir " +
                             (dir / "run").string() +
                             " --set block_channels=2,2,2,2 --set lstm_hidden=4";
  ASSERT_EQ(run(cli("prepare" + common + " --encoding semantic")).exit_code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "split.txt"));
  ASSERT_EQ(run(cli("train --encoding semantic --condition clean --max-epochs 1" + common))
                .exit_code,
            0);
  EXPECT_EQ(run(cli("evaluate --encoding semantic --eval-condition clean" + common)).exit_code, 0);
  // No distorted variants exist in this corpus.
  EXPECT_EQ(run(cli("evaluate --encoding semantic --eval-condition distorted" + common)).exit_code,
            3);
  EXPECT_EQ(run(cli("train --encoding semantic --condition distorted --max-epochs 1" + common))
                .exit_code,
            3);
  // Checkpoint vocabulary came from the semantic encoding.
  EXPECT_EQ(run(cli("evaluate --encoding agnostic --eval-condition clean" + common)).exit_code, 3);
}

}  // namespace
}  // namespace r2crnn
