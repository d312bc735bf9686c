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

#include "r2crnn/config.h"

#include <fstream>
#include <sstream>

#include "r2crnn/errors.h"
#include "r2crnn/text.h"

namespace r2crnn {

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") dataset = value;
  else if (key == "synth") synth = parse_bool(value, key);
  else if (key == "synth_count") synth_count = parse_size(value, key);
  else if (key == "synth_classes") synth_classes = parse_size(value, key);
  else if (key == "synth_max_label") synth_max_label = parse_size(value, key);
  else if (key == "encoding") encoding = parse_encoding_name(value);
  else if (key == "condition") condition = parse_condition_name(value);
  else if (key == "eval_condition") eval_condition = parse_condition_name(value);
  else if (key == "distorted_marker") distorted_marker = value;
  else if (key == "seed") seed = parse_u64(value, key);
  else if (key == "lr") lr = parse_double(value, key);
  else if (key == "max_epochs") max_epochs = parse_size(value, key);
  else if (key == "batch_size") batch_size = parse_size(value, key);
  else if (key == "clip_norm") clip_norm = parse_double(value, key);
  else if (key == "stop_on_perfect") stop_on_perfect = parse_bool(value, key);
  else if (key == "input_height") arch.input_height = parse_size(value, key);
  else if (key == "block_channels") arch.block_channels = parse_size_list(value, key);
  else if (key == "rcl_unroll") arch.rcl_unroll = parse_size(value, key);
  else if (key == "bn_step_statistics") arch.bn_step_statistics = parse_bool(value, key);
  else if (key == "lstm_hidden") arch.lstm_hidden = parse_size(value, key);
  else if (key == "lstm_layers") arch.lstm_layers = parse_size(value, key);
  else if (key == "out_dir") out_dir = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "split_file") split_file = value;
  else if (key == "resume") resume = value;
  else throw ConfigError("unknown config key '" + key + "'");

  if (key == "lr" && !(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (key == "batch_size" && batch_size == 0) throw ConfigError("batch_size must be positive");
  if (key == "distorted_marker" && value.empty()) {
    throw ConfigError("distorted_marker must not be empty");
  }
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [key, value] : parse_key_values(RunConfig{}.to_text())) out.push_back(key);
  return out;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "dataset=" << dataset.string() << '\n'
     << "synth=" << b(synth) << '\n'
     << "synth_count=" << synth_count << '\n'
     << "synth_classes=" << synth_classes << '\n'
     << "synth_max_label=" << synth_max_label << '\n'
     << "encoding=" << to_string(encoding) << '\n'
     << "condition=" << to_string(condition) << '\n'
     << "eval_condition=" << to_string(eval_condition) << '\n'
     << "distorted_marker=" << distorted_marker << '\n'
     << "seed=" << seed << '\n'
     << "lr=" << format_double(lr) << '\n'
     << "max_epochs=" << max_epochs << '\n'
     << "batch_size=" << batch_size << '\n'
     << "clip_norm=" << format_double(clip_norm) << '\n'
     << "stop_on_perfect=" << b(stop_on_perfect) << '\n'
     << "input_height=" << arch.input_height << '\n'
     << "block_channels=" << join_sizes(arch.block_channels) << '\n'
     << "rcl_unroll=" << arch.rcl_unroll << '\n'
     << "bn_step_statistics=" << b(arch.bn_step_statistics) << '\n'
     << "lstm_hidden=" << arch.lstm_hidden << '\n'
     << "lstm_layers=" << arch.lstm_layers << '\n'
     << "out_dir=" << out_dir.string() << '\n'
     << "checkpoint=" << checkpoint.string() << '\n'
     << "split_file=" << split_file.string() << '\n'
     << "resume=" << resume.string() << '\n';
  return os.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  for (const auto& [key, value] : parse_key_values(text)) c.set(key, value);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? out_dir / "best.ckpt" : checkpoint;
}

std::filesystem::path RunConfig::split_path() const {
  return split_file.empty() ? out_dir / "split.txt" : split_file;
}

SynthOptions RunConfig::synth_options() const {
  SynthOptions o;
  o.seed = seed;
  o.count = synth_count;
  o.classes = synth_classes;
  o.max_label_length = synth_max_label;
  return o;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.adam.lr = lr;
  o.max_epochs = max_epochs;
  o.batch_size = batch_size;
  o.clip_norm = clip_norm;
  o.stop_on_perfect = stop_on_perfect;
  o.out_dir = out_dir;
  return o;
}

}  // namespace r2crnn
