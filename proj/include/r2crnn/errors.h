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

#include <stdexcept>
#include <string>

namespace r2crnn {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not fit an operation. The message names the
// operation and the offending dimension.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration keys or values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing, malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in a loss or gradient, or an infeasible numeric request.
class NumericError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public DataError {
 public:
  enum class Kind { kIo, kBadMagic, kVersion, kChecksum, kFormat };

  CheckpointError(Kind kind, const std::string& what)
      : DataError(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace r2crnn
