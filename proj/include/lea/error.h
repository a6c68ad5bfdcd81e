// Copyright 2026 The LEA Authors
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
#include <stdexcept>
#include <string>

namespace lea {

// Root of every error thrown by the library. The CLI maps ValidationError to
// exit code 1 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something that violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed or inconsistent file on disk.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: non-finite values, failed factorizations.
class NumericError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public NumericError {
 public:
  NotPositiveDefiniteError(std::size_t pivot, double value, const std::string& hint = "")
      : NumericError("matrix is not positive definite: pivot " + std::to_string(pivot) +
                     " is " + std::to_string(value) + (hint.empty() ? "" : "; " + hint)),
        pivot_(pivot),
        value_(value) {}

  std::size_t pivot() const { return pivot_; }
  double value() const { return value_; }

 private:
  std::size_t pivot_;
  double value_;
};

}  // namespace lea
