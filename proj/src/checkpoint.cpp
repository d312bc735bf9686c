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

#include "r2crnn/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "r2crnn/errors.h"
#include "r2crnn/text.h"

namespace r2crnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little endian");

namespace {

constexpr char kMagic[4] = {'R', '2', 'C', 'K'};
constexpr std::uint8_t kDtypeF32 = 0;
const std::string kStatePrefix = "train.";
const std::string kAdamFirst = "adam.first/";
const std::string kAdamSecond = "adam.second/";

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(U));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::size_t size() const { return bytes_.size(); }
  std::span<const std::uint8_t> since(std::size_t offset) const {
    return std::span(bytes_).subspan(offset);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    U v;
    std::memcpy(&v, need(sizeof(U)), sizeof(U));
    return v;
  }
  std::string get_string(std::size_t n) {
    const auto* p = need(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  const std::uint8_t* need(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw CheckpointError(CheckpointError::Kind::kChecksum, "checkpoint truncated");
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t pos() const { return pos_; }
  std::span<const std::uint8_t> between(std::size_t a, std::size_t b) const {
    return bytes_.subspan(a, b - a);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_tensor(Writer& w, const std::string& name, const Tensor<float>& t) {
  const std::size_t start = w.size();
  w.put(static_cast<std::uint32_t>(name.size()));
  w.put_bytes(name.data(), name.size());
  w.put(kDtypeF32);
  w.put(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.put(static_cast<std::uint64_t>(d));
  w.put_bytes(t.data(), t.numel() * sizeof(float));
  w.put(fnv1a(w.since(start)));
}

std::string state_text(const Checkpoint& c) {
  std::string out = c.arch.to_text();
  auto line = [&out](const std::string& key, const std::string& value) {
    out += kStatePrefix + key + "=" + value + "\n";
  };
  line("seed", std::to_string(c.state.seed));
  line("epoch", std::to_string(c.state.epoch));
  line("step", std::to_string(c.state.step));
  line("best_ser", format_double(c.state.best_ser));
  line("best_epoch", std::to_string(c.state.best_epoch));
  line("encoding", c.state.encoding);
  line("condition", c.state.condition);
  if (c.adam) {
    line("adam_step", std::to_string(c.adam->step));
    line("lr", format_double(c.adam->options.lr));
    line("beta1", format_double(c.adam->options.beta1));
    line("beta2", format_double(c.adam->options.beta2));
    line("eps", format_double(c.adam->options.eps));
  }
  return out;
}

CheckpointError format_error(const std::string& what) {
  return CheckpointError(CheckpointError::Kind::kFormat, "checkpoint: " + what);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put(kCheckpointVersion);
  for (const std::string& block : {state_text(c), c.vocab.to_text()}) {
    w.put(static_cast<std::uint64_t>(block.size()));
    w.put_bytes(block.data(), block.size());
  }
  std::uint32_t count = static_cast<std::uint32_t>(c.params.size());
  if (c.adam) count += static_cast<std::uint32_t>(2 * c.adam->slots.size());
  w.put(count);
  for (const auto& e : c.params.entries()) put_tensor(w, e.name, e.value);
  if (c.adam) {
    for (const auto& s : c.adam->slots) {
      put_tensor(w, kAdamFirst + s.name, s.first);
      put_tensor(w, kAdamSecond + s.name, s.second);
    }
  }
  w.put(fnv1a(w.since(0)));
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  using Kind = CheckpointError::Kind;
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(Kind::kBadMagic, "not a checkpoint file (bad magic)");
  }
  if (bytes.size() < 4 + 4 + 8) throw CheckpointError(Kind::kChecksum, "checkpoint truncated");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kVersion, "unsupported checkpoint version " +
                                              std::to_string(version) + " (expected " +
                                              std::to_string(kCheckpointVersion) + ")");
  }
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a(bytes.first(bytes.size() - 8)) != stored) {
    throw CheckpointError(Kind::kChecksum, "checkpoint checksum mismatch (corrupt or truncated)");
  }

  Reader r(bytes.first(bytes.size() - 8));
  r.need(8);
  const std::string config = r.get_string(r.get<std::uint64_t>());
  const std::string vocab = r.get_string(r.get<std::uint64_t>());

  Checkpoint c;
  std::string arch_text;
  std::optional<std::uint64_t> adam_step;
  AdamOptions adam_opts;
  try {
    for (const auto& [key, value] : parse_key_values(config)) {
      if (key.rfind(kStatePrefix, 0) != 0) {
        arch_text += key + "=" + value + "\n";
        continue;
      }
      const std::string k = key.substr(kStatePrefix.size());
      if (k == "seed") c.state.seed = parse_u64(value, key);
      else if (k == "epoch") c.state.epoch = parse_u64(value, key);
      else if (k == "step") c.state.step = parse_u64(value, key);
      else if (k == "best_ser") c.state.best_ser = parse_double(value, key);
      else if (k == "best_epoch") c.state.best_epoch = parse_u64(value, key);
      else if (k == "encoding") c.state.encoding = value;
      else if (k == "condition") c.state.condition = value;
      else if (k == "adam_step") adam_step = parse_u64(value, key);
      else if (k == "lr") adam_opts.lr = parse_double(value, key);
      else if (k == "beta1") adam_opts.beta1 = parse_double(value, key);
      else if (k == "beta2") adam_opts.beta2 = parse_double(value, key);
      else if (k == "eps") adam_opts.eps = parse_double(value, key);
      else throw format_error("unknown state key " + key);
    }
    c.arch = ArchConfig::parse(arch_text);
    c.vocab = Vocabulary::parse(vocab);
  } catch (const ConfigError& e) {
    throw format_error(e.what());
  } catch (const CheckpointError&) {
    throw;
  } catch (const DataError& e) {
    throw format_error(e.what());
  }

  if (adam_step) {
    c.adam.emplace();
    c.adam->step = *adam_step;
    c.adam->options = adam_opts;
  }
  // Parameter kinds and completeness come from the architecture itself.
  try {
    c.params = init_params<float>(c.arch, 0);
  } catch (const ConfigError& e) {
    throw format_error(e.what());
  }
  std::vector<std::pair<std::string, Tensor<float>>> loaded;
  const std::uint32_t count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.pos();
    const std::string name = r.get_string(r.get<std::uint32_t>());
    const std::uint8_t dtype = r.get<std::uint8_t>();
    if (dtype != kDtypeF32) throw format_error("unknown dtype tag for " + name);
    const std::uint32_t rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw format_error("bad rank for " + name);
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.get<std::uint64_t>());
      if (d == 0 || numel > (std::size_t{1} << 40) / d) throw format_error("bad extent for " + name);
      numel *= d;
    }
    std::vector<float> values(numel);
    std::memcpy(values.data(), r.need(numel * sizeof(float)), numel * sizeof(float));
    const std::uint64_t expect = fnv1a(r.between(start, r.pos()));
    if (r.get<std::uint64_t>() != expect) {
      throw CheckpointError(Kind::kChecksum, "checksum mismatch in tensor " + name);
    }
    Tensor<float> t(std::move(shape), std::move(values));

    auto adam_slot = [&](const std::string& prefix) -> AdamSlot* {
      if (!c.adam || name.rfind(prefix, 0) != 0) return nullptr;
      const std::string param = name.substr(prefix.size());
      for (auto& s : c.adam->slots) {
        if (s.name == param) return &s;
      }
      c.adam->slots.push_back({param, Tensor<float>({1}), Tensor<float>({1})});
      return &c.adam->slots.back();
    };
    if (AdamSlot* s = adam_slot(kAdamFirst)) {
      s->first = std::move(t);
    } else if (AdamSlot* s2 = adam_slot(kAdamSecond)) {
      s2->second = std::move(t);
    } else {
      loaded.emplace_back(name, std::move(t));
    }
  }
  if (!r.done()) throw format_error("trailing bytes after tensor records");
  if (loaded.size() != c.params.size()) {
    throw format_error(std::to_string(loaded.size()) + " parameter tensors, architecture has " +
                       std::to_string(c.params.size()));
  }
  std::set<std::string> seen;
  for (auto& [name, t] : loaded) {
    if (!c.params.contains(name)) throw format_error("unexpected tensor " + name);
    if (!seen.insert(name).second) throw format_error("duplicate tensor " + name);
    Tensor<float>& dst = c.params.at(name);
    if (dst.shape() != t.shape()) {
      throw format_error("tensor " + name + " has shape " + shape_str(t.shape()) + ", expected " +
                         shape_str(dst.shape()));
    }
    dst = std::move(t);
  }
  if (c.adam) {
    for (const auto& s : c.adam->slots) {
      if (!c.params.contains(s.name) || s.first.shape() != c.params.at(s.name).shape() ||
          s.second.shape() != c.params.at(s.name).shape()) {
        throw format_error("optimizer state does not match parameter " + s.name);
      }
    }
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) {
      throw CheckpointError(CheckpointError::Kind::kIo, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw CheckpointError(CheckpointError::Kind::kIo,
                          "cannot move checkpoint into " + path.string() + ": " + ec.message());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace r2crnn
