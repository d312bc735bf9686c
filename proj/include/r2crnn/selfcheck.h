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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace r2crnn {

struct CheckResult {
  std::string name;
  double error = 0.0;  // worst observed error
  double tolerance = 0.0;
  std::string detail;

  bool passed() const { return error < tolerance; }
};

// Analytic gradients of every differentiable building block against 64-bit
// central differences.
std::vector<CheckResult> gradient_suite(std::uint64_t seed = 1);

// Random small lattices (T <= 6, L <= 3, V <= 4): forward-backward loss
// against path enumeration, and the probabilities of all labels summing
// to one.
std::vector<CheckResult> ctc_suite(std::size_t instances = 200, std::uint64_t seed = 1);

// "PASS  name  error < tolerance" style line.
std::string format_check(const CheckResult& r);

}  // namespace r2crnn
