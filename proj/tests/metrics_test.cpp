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

#include <algorithm>
#include <functional>
#include <random>

#include "json.hpp"
#include "r2crnn/errors.h"
#include "r2crnn/metrics.h"

namespace r2crnn {
namespace {

// Memoized recursion over prefixes; shares no code with the library.
std::size_t oracle_distance(const LabelSequence& a, const LabelSequence& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  std::function<long(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> long {
    if (i == 0) return static_cast<long>(j);
    if (j == 0) return static_cast<long>(i);
    long& m = memo[i][j];
    if (m >= 0) return m;
    m = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
    return m;
  };
  return static_cast<std::size_t>(d(a.size(), b.size()));
}

LabelSequence random_sequence(std::mt19937_64& gen) {
  LabelSequence s(gen() % 9);
  for (auto& v : s) v = gen() % 4;
  return s;
}

TEST(EditDistance, Examples) {
  const LabelSequence abc{1, 2, 3};
  EXPECT_EQ(edit_distance(abc, abc), 0u);
  EXPECT_EQ(edit_distance(LabelSequence{}, abc), 3u);
  EXPECT_EQ(edit_distance(abc, LabelSequence{}), 3u);
  // kitten / sitting with letters as tokens
  const LabelSequence kitten{'k', 'i', 't', 't', 'e', 'n'};
  const LabelSequence sitting{'s', 'i', 't', 't', 'i', 'n', 'g'};
  EXPECT_EQ(edit_distance(kitten, sitting), 3u);
  EXPECT_EQ(oracle_distance(kitten, sitting), 3u);
}

TEST(EditDistance, AgreesWithOracleAndIsAMetric) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_sequence(gen), b = random_sequence(gen), c = random_sequence(gen);
    const std::size_t ab = edit_distance(a, b);
    EXPECT_EQ(ab, oracle_distance(a, b));
    EXPECT_EQ(ab, edit_distance(b, a));
    EXPECT_EQ(ab == 0, a == b);
    EXPECT_LE(edit_distance(a, c), ab + edit_distance(b, c));
  }
}

std::vector<ScoredPair> pairs_with(std::vector<std::pair<std::size_t, std::size_t>> edits_len) {
  std::vector<ScoredPair> out;
  for (auto [edits, len] : edits_len) {
    ScoredPair p;
    p.reference.assign(len, 1);
    p.prediction = p.reference;
    for (std::size_t i = 0; i < edits; ++i) p.prediction[i] = 2;
    out.push_back(p);
  }
  return out;
}

TEST(Ser, Examples) {
  EXPECT_EQ(compute_ser(pairs_with({{0, 4}, {0, 7}})), 0.0);
  EXPECT_DOUBLE_EQ(compute_ser(pairs_with({{1, 10}})), 10.0);
  const auto even = pairs_with({{1, 10}, {0, 10}});
  EXPECT_DOUBLE_EQ(compute_ser(even), 5.0);
  EXPECT_DOUBLE_EQ(compute_ser_macro(even), 5.0);
  const auto uneven = pairs_with({{1, 5}, {0, 15}});
  EXPECT_DOUBLE_EQ(compute_ser(uneven), 5.0);
  EXPECT_DOUBLE_EQ(compute_ser_macro(uneven), 10.0);
}

TEST(Ser, RejectsEmptyInputAndEmptyReference) {
  EXPECT_THROW(compute_ser({}), DataError);
  EXPECT_THROW(compute_ser(pairs_with({{0, 3}, {0, 0}})), DataError);
}

TEST(Er, Examples) {
  EXPECT_EQ(compute_er(pairs_with({{0, 3}, {0, 2}})), 0.0);
  EXPECT_DOUBLE_EQ(compute_er(pairs_with({{0, 3}, {2, 4}, {0, 2}, {0, 5}})), 25.0);
}

TEST(Cell, MatchesTableFormat) {
  EXPECT_EQ(format_cell(0.59, 16.2), "0.59/16.2");
  EXPECT_EQ(format_cell(0.0, 0.0), "0.00/0.0");
  EXPECT_EQ(format_cell(12.345, 100.0), "12.35/100.0");
}

TEST(Ser, ReorderInvariantAndZeroTogetherWithEr) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredPair> pairs(1 + gen() % 6);
    for (auto& p : pairs) {
      do p.reference = random_sequence(gen);
      while (p.reference.empty());
      p.prediction = gen() % 2 ? p.reference : random_sequence(gen);
    }
    const double ser = compute_ser(pairs), er = compute_er(pairs);
    std::shuffle(pairs.begin(), pairs.end(), gen);
    EXPECT_DOUBLE_EQ(compute_ser(pairs), ser);
    EXPECT_EQ(er == 0.0, ser == 0.0);
    EXPECT_GE(er, 0.0);
    EXPECT_LE(er, 100.0);
  }
}

TEST(Report, RecordsAndSerialisation) {
  const auto pairs = pairs_with({{1, 4}, {0, 4}});
  const std::vector<std::string> ids{"a", "b"};
  EvalReport r = evaluate_pairs(pairs, ids);
  r.encoding = "agnostic";
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].id, "a");
  EXPECT_EQ(r.records[0].edits, 1u);
  EXPECT_FALSE(r.records[0].exact);
  EXPECT_TRUE(r.records[1].exact);
  EXPECT_DOUBLE_EQ(r.er, 50.0);
  EXPECT_EQ(r.cell(), "12.50/50.0");

  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_DOUBLE_EQ(j["ser"].get<double>(), 12.5);
  EXPECT_EQ(j["encoding"], "agnostic");
  EXPECT_EQ(j["records"].size(), 2u);
  EXPECT_NE(r.to_text().find("12.50/50.0"), std::string::npos);
}

}  // namespace
}  // namespace r2crnn
