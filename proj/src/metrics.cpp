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

#include "r2crnn/metrics.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <numeric>

#include "r2crnn/errors.h"

namespace r2crnn {

std::size_t edit_distance(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  // Single-row DP over b.
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace {

void check_pairs(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw DataError("metrics: no pairs to score");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].reference.empty()) {
      throw DataError("metrics: zero-length reference at pair " + std::to_string(i));
    }
  }
}

}  // namespace

double compute_ser(std::span<const ScoredPair> pairs) {
  check_pairs(pairs);
  std::size_t edits = 0, length = 0;
  for (const auto& p : pairs) {
    edits += edit_distance(p.reference, p.prediction);
    length += p.reference.size();
  }
  return 100.0 * static_cast<double>(edits) / static_cast<double>(length);
}

double compute_ser_macro(std::span<const ScoredPair> pairs) {
  check_pairs(pairs);
  double total = 0.0;
  for (const auto& p : pairs) {
    total += static_cast<double>(edit_distance(p.reference, p.prediction)) /
             static_cast<double>(p.reference.size());
  }
  return 100.0 * total / static_cast<double>(pairs.size());
}

double compute_er(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw DataError("metrics: no pairs to score");
  std::size_t wrong = 0;
  for (const auto& p : pairs) wrong += p.reference != p.prediction ? 1 : 0;
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(pairs.size());
}

std::string format_cell(double ser, double er) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f/%.1f", ser, er);
  return buf;
}

EvalReport evaluate_pairs(std::span<const ScoredPair> pairs, std::span<const std::string> ids) {
  if (!ids.empty() && ids.size() != pairs.size()) {
    throw DataError("metrics: " + std::to_string(ids.size()) + " ids for " +
                    std::to_string(pairs.size()) + " pairs");
  }
  EvalReport report;
  report.ser = compute_ser(pairs);
  report.ser_macro = compute_ser_macro(pairs);
  report.er = compute_er(pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    SampleRecord r;
    r.id = ids.empty() ? std::to_string(i) : ids[i];
    r.edits = edit_distance(pairs[i].reference, pairs[i].prediction);
    r.reference_length = pairs[i].reference.size();
    r.exact = r.edits == 0;
    report.records.push_back(std::move(r));
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["ser"] = ser;
  j["ser_macro"] = ser_macro;
  j["er"] = er;
  j["cell"] = cell();
  j["train_condition"] = train_condition;
  j["eval_condition"] = eval_condition;
  j["encoding"] = encoding;
  j["seed"] = seed;
  auto& recs = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    recs.push_back({{"id", r.id},
                    {"edits", r.edits},
                    {"reference_length", r.reference_length},
                    {"exact", r.exact}});
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "train=%s eval=%s encoding=%s seed=%llu\n",
                train_condition.c_str(), eval_condition.c_str(), encoding.c_str(),
                static_cast<unsigned long long>(seed));
  out += line;
  std::snprintf(line, sizeof line, "SER/ER %s  (macro SER %.2f, %zu samples)\n", cell().c_str(),
                ser_macro, records.size());
  out += line;
  out += "id\tedits\tref_len\texact\n";
  for (const auto& r : records) {
    out += r.id + '\t' + std::to_string(r.edits) + '\t' + std::to_string(r.reference_length) +
           '\t' + (r.exact ? "1" : "0") + '\n';
  }
  return out;
}

void EvalReport::save(const std::filesystem::path& json_path,
                      const std::filesystem::path& text_path) const {
  for (const auto& [path, text] : {std::pair{json_path, to_json()}, std::pair{text_path, to_text()}}) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) throw DataError("cannot write " + path.string());
  }
}

}  // namespace r2crnn
