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

#include "r2crnn/primus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "r2crnn/arch.h"
#include "r2crnn/errors.h"
#include "r2crnn/image.h"
#include "r2crnn/text.h"

namespace r2crnn {

namespace fs = std::filesystem;

std::string_view to_string(Encoding e) {
  return e == Encoding::kSemantic ? "semantic" : "agnostic";
}

std::string_view to_string(Condition c) {
  return c == Condition::kClean ? "clean" : "distorted";
}

Encoding parse_encoding_name(const std::string& name) {
  if (name == "semantic") return Encoding::kSemantic;
  if (name == "agnostic") return Encoding::kAgnostic;
  throw ConfigError("encoding must be semantic or agnostic, got '" + name + "'");
}

Condition parse_condition_name(const std::string& name) {
  if (name == "clean") return Condition::kClean;
  if (name == "distorted") return Condition::kDistorted;
  throw ConfigError("condition must be clean or distorted, got '" + name + "'");
}

const fs::path& Incipit::image(Condition c) const {
  if (c == Condition::kClean) return clean_image;
  if (!distorted_image) throw DataError("incipit " + id + " has no distorted image");
  return *distorted_image;
}

std::vector<std::string> parse_encoding(std::string_view line, std::string_view source) {
  if (line.find('\n') != std::string_view::npos &&
      !trim(line.substr(line.find('\n'))).empty()) {
    throw DataError("encoding in " + std::string(source) + " spans several lines");
  }
  std::vector<std::string> tokens = split_whitespace(line);
  if (tokens.empty()) throw DataError("empty encoding in " + std::string(source));
  return tokens;
}

// ------------------------------------------------------------ vocabulary

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> corpus) {
  std::set<std::string> unique;
  for (const auto& seq : corpus) unique.insert(seq.begin(), seq.end());
  return from_tokens(std::vector<std::string>(unique.begin(), unique.end()));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty() || split_whitespace(tokens[i]).size() != 1 ||
        split_whitespace(tokens[i])[0] != tokens[i]) {
      throw DataError("vocabulary: invalid token at line " + std::to_string(i + 1));
    }
    if (i > 0 && !(tokens[i - 1] < tokens[i])) {
      throw DataError("vocabulary: tokens not sorted/unique at line " + std::to_string(i + 1));
    }
    v.index_.emplace(tokens[i], i);
  }
  v.tokens_ = std::move(tokens);
  return v;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw DataError("unknown token '" + token + "'");
  return it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) {
    throw DataError("class id " + std::to_string(id) + " is not a vocabulary token");
  }
  return tokens_[id];
}

LabelSequence Vocabulary::encode(std::span<const std::string> tokens,
                                 std::string_view sample_id) const {
  LabelSequence out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = index_.find(t);
    if (it == index_.end()) {
      throw DataError("unknown token '" + t + "' in sample " + std::string(sample_id));
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const std::size_t> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(token(id));
  return out;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(const std::string& text) {
  if (!text.empty() && text.back() != '\n') {
    throw DataError("vocabulary: missing trailing newline");
  }
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    tokens.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return from_tokens(std::move(tokens));
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw DataError("cannot write " + path.string());
}

}  // namespace

void Vocabulary::save(const fs::path& path) const { write_file(path, to_text()); }

Vocabulary Vocabulary::load(const fs::path& path) { return parse(read_file(path)); }

// ---------------------------------------------------------------- corpus

namespace {

std::vector<std::string> read_encoding_file(const fs::path& path, const std::string& id) {
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) return parse_encoding(line, id + ":" + path.filename().string());
  }
  throw DataError("empty encoding in " + id + ":" + path.filename().string());
}

bool is_image_extension(std::string ext) {
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

CorpusScan discover_corpus(const fs::path& root, const DiscoveryOptions& opts) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw DataError("dataset root is not a readable directory: " + root.string());
  }
  std::vector<fs::path> dirs;
  for (fs::directory_iterator it(root, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_directory()) dirs.push_back(it->path());
  }
  if (ec) throw DataError("cannot list dataset root " + root.string() + ": " + ec.message());
  std::sort(dirs.begin(), dirs.end());

  CorpusScan scan;
  for (const auto& dir : dirs) {
    const std::string id = dir.filename().string();
    Incipit inc;
    inc.id = id;
    inc.clean_image = dir / (id + ".png");
    const fs::path semantic = dir / (id + ".semantic");
    const fs::path agnostic = dir / (id + ".agnostic");
    std::string missing;
    if (!fs::is_regular_file(inc.clean_image)) missing = "missing clean image " + id + ".png";
    else if (!fs::is_regular_file(semantic)) missing = "missing " + id + ".semantic";
    else if (!fs::is_regular_file(agnostic)) missing = "missing " + id + ".agnostic";
    if (!missing.empty()) {
      scan.skipped.push_back({dir, missing});
      continue;
    }
    try {
      inc.semantic = read_encoding_file(semantic, id);
      inc.agnostic = read_encoding_file(agnostic, id);
    } catch (const DataError& e) {
      scan.skipped.push_back({dir, e.what()});
      continue;
    }
    std::vector<fs::path> distorted;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (!f.is_regular_file()) continue;
      const fs::path& p = f.path();
      if (is_image_extension(p.extension().string()) &&
          p.stem().string().find(opts.distorted_marker) != std::string::npos) {
        distorted.push_back(p);
      }
    }
    std::sort(distorted.begin(), distorted.end());
    if (!distorted.empty()) inc.distorted_image = distorted.front();
    scan.incipits.push_back(std::move(inc));
  }
  return scan;
}

// ----------------------------------------------------------------- split

namespace {

std::uint64_t split_hash(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (unsigned char c : id) mix(c);
  return h;
}

}  // namespace

SplitSpec make_split(std::vector<std::string> ids, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw DataError("split: duplicate incipit ids");
  }
  std::vector<std::pair<std::uint64_t, std::string>> keyed;
  keyed.reserve(ids.size());
  for (auto& id : ids) keyed.emplace_back(split_hash(seed, id), std::move(id));
  std::sort(keyed.begin(), keyed.end());
  const std::size_t n = keyed.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  SplitSpec split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? split.train : i < n_train + n_val ? split.validation : split.test;
    dst.push_back(std::move(keyed[i].second));
  }
  return split;
}

std::string SplitSpec::to_text() const {
  std::ostringstream os;
  os << "# seed " << seed << '\n';
  for (const auto& [name, ids] : {std::pair{"train", &train}, std::pair{"validation", &validation},
                                  std::pair{"test", &test}}) {
    os << '[' << name << "]\n";
    for (const auto& id : *ids) os << id << '\n';
  }
  return os.str();
}

SplitSpec SplitSpec::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SplitSpec split;
  if (!std::getline(in, line) || line.rfind("# seed ", 0) != 0) {
    throw DataError("split file: missing '# seed N' header");
  }
  try {
    split.seed = parse_u64(line.substr(7), "seed");
  } catch (const ConfigError& e) {
    throw DataError(std::string("split file: ") + e.what());
  }
  std::vector<std::string>* section = nullptr;
  while (std::getline(in, line)) {
    const std::string t(trim(line));
    if (t.empty()) continue;
    if (t == "[train]") section = &split.train;
    else if (t == "[validation]") section = &split.validation;
    else if (t == "[test]") section = &split.test;
    else if (!section) throw DataError("split file: id before first section");
    else section->push_back(t);
  }
  return split;
}

void SplitSpec::save(const fs::path& path) const { write_file(path, to_text()); }

SplitSpec SplitSpec::load(const fs::path& path) { return parse(read_file(path)); }

// -------------------------------------------------------------- batching

template <typename T>
void check_feasible(const Sample<T>& sample, std::size_t frame_stride) {
  const std::size_t frames = count_frames(sample.width(), frame_stride);
  const std::size_t need = min_frames(sample.label);
  if (frames < need) {
    throw DataError("sample " + sample.id + ": " + std::to_string(frames) +
                    " frames cannot align a label needing " + std::to_string(need) +
                    " (length + repeats)");
  }
}

template <typename T>
Batch<T> make_batch(std::span<const Sample<T>> samples, std::size_t frame_stride) {
  if (samples.empty()) throw DataError("make_batch: no samples");
  const std::size_t height = samples[0].image.dim(1);
  std::size_t max_width = 0;
  for (const auto& s : samples) {
    if (s.image.rank() != 3 || s.image.dim(0) != 1 || s.image.dim(1) != height) {
      throw DataError("make_batch: sample " + s.id + " has image shape " +
                      shape_str(s.image.shape()) + ", expected [1," + std::to_string(height) +
                      ",W]");
    }
    check_feasible(s, frame_stride);
    max_width = std::max(max_width, s.width());
  }
  Batch<T> batch;
  batch.images = Tensor<T>({samples.size(), 1, height, max_width});
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const Sample<T>& s = samples[b];
    const std::size_t w = s.width();
    T* dst = batch.images.data() + b * height * max_width;
    for (std::size_t y = 0; y < height; ++y) {
      std::copy_n(s.image.data() + y * w, w, dst + y * max_width);
    }
    batch.widths.push_back(w);
    batch.frames.push_back(count_frames(w, frame_stride));
    batch.labels.push_back(s.label);
    batch.ids.push_back(s.id);
  }
  return batch;
}

template <typename T>
std::vector<Batch<T>> make_batches(std::span<const Sample<T>> samples, std::size_t max_batch,
                                   std::size_t frame_stride) {
  if (max_batch == 0) throw ConfigError("batch size must be positive");
  std::vector<Batch<T>> out;
  for (std::size_t i = 0; i < samples.size(); i += max_batch) {
    out.push_back(make_batch(samples.subspan(i, std::min(max_batch, samples.size() - i)),
                             frame_stride));
  }
  return out;
}

template <typename T>
std::vector<Sample<T>> load_samples(std::span<const Incipit> incipits, Encoding encoding,
                                    Condition condition, const Vocabulary& vocab,
                                    std::size_t height) {
  std::vector<Sample<T>> out;
  out.reserve(incipits.size());
  for (const auto& inc : incipits) {
    Sample<T> s;
    s.id = inc.id;
    s.label = vocab.encode(inc.tokens(encoding), inc.id);
    s.image = load_image<T>(inc.image(condition), height);
    out.push_back(std::move(s));
  }
  return out;
}

#define R2CRNN_INSTANTIATE_DATA(T)                                                          \
  template void check_feasible<T>(const Sample<T>&, std::size_t);                           \
  template Batch<T> make_batch<T>(std::span<const Sample<T>>, std::size_t);                 \
  template std::vector<Batch<T>> make_batches<T>(std::span<const Sample<T>>, std::size_t,   \
                                                 std::size_t);                              \
  template std::vector<Sample<T>> load_samples<T>(std::span<const Incipit>, Encoding,       \
                                                  Condition, const Vocabulary&, std::size_t);

R2CRNN_INSTANTIATE_DATA(float)
R2CRNN_INSTANTIATE_DATA(double)

}  // namespace r2crnn
