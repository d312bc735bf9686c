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
#include <string_view>
#include <utility>
#include <vector>

// Small text helpers shared by the config, checkpoint and data parsers.
// Parse failures throw ConfigError naming the key.
namespace r2crnn {

std::string_view trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

// "key=value" per line; blank lines and lines starting with '#' skipped.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

std::size_t parse_size(const std::string& value, const std::string& key);
std::uint64_t parse_u64(const std::string& value, const std::string& key);
double parse_double(const std::string& value, const std::string& key);
bool parse_bool(const std::string& value, const std::string& key);
std::vector<std::size_t> parse_size_list(const std::string& value, const std::string& key);
std::string join_sizes(const std::vector<std::size_t>& values);

// Shortest decimal text that round-trips a double exactly.
std::string format_double(double value);

}  // namespace r2crnn
