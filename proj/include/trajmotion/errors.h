// Copyright 2026 The trajmotion Authors
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

namespace trajmotion {

// Base class for every error raised by the library. The CLI maps
// ConfigError to exit code 2 and DivergenceError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Channel arrays disagree on frame count or the layout is malformed.
class RepresentationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch between tensors that must agree.
class TensorError : public Error {
 public:
  using Error::Error;
};

// Invalid diffusion step index or a degenerate coefficient.
class StepError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced by guidance or training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TokenizerError : public Error {
 public:
  using Error::Error;
};

}  // namespace trajmotion
