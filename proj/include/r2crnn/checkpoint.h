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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "r2crnn/arch.h"
#include "r2crnn/layers.h"
#include "r2crnn/optim.h"
#include "r2crnn/primus.h"

namespace r2crnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Progress counters needed to continue a run exactly. The shuffle order
// of epoch e is a pure function of (seed, e), so no generator state is
// stored beyond these.
struct TrainingState {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;  // completed epochs
  std::uint64_t step = 0;   // completed optimizer steps
  double best_ser = -1.0;   // negative until the first validation
  std::uint64_t best_epoch = 0;
  std::string encoding;   // label encoding the vocabulary came from
  std::string condition;  // image condition trained on

  bool operator==(const TrainingState&) const = default;
};

struct Checkpoint {
  ArchConfig arch;
  Vocabulary vocab;
  ParamRegistry<float> params;  // trainable tensors and BN buffers
  std::optional<AdamState> adam;
  TrainingState state;
};

// Byte layout (little endian):
//   "R2CK" u32 version
//   u64 len + config text, u64 len + vocabulary text
//   u32 tensor count, then per tensor:
//     u32 len + name, u8 dtype (0 = f32), u32 rank, u64 extents[rank],
//     f32 values, u64 checksum of the record bytes before it
//   u64 checksum of every preceding byte
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

// Writes through a temporary file and renames, so an interrupted save
// leaves the previous file intact.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace r2crnn
