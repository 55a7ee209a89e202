// Copyright 2026 The ASD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ASD_ERROR_H_
#define ASD_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace asd {

// Base of every error the library raises. Subclasses separate contract
// violations on caller input from internal failures; the CLI maps the former
// to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor rank or extent does not match what an operation expects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameter or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong lifecycle state (consumed tape, missing grad).
class StateError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced or consumed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or insufficient input data.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Audio and video sequences disagree on their window count.
class AlignmentError : public InputError {
 public:
  using InputError::InputError;
};

// Ground-truth rows without a matching prediction.
class CoverageError : public InputError {
 public:
  using InputError::InputError;
};

// A metric has no meaning on the given input (AP without positives).
class UndefinedMetricError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint contents do not fit the configured architecture.
class LoadError : public Error {
 public:
  using Error::Error;
};

}  // namespace asd

#endif  // ASD_ERROR_H_
