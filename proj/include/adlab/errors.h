// Copyright 2026 The adlab Authors.
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

#ifndef ADLAB_ERRORS_H_
#define ADLAB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace adlab {

// All library failures derive from Error so callers can map them to exit
// codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or empty operation input.
class InputError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// API misuse: mismatched layouts, stale caches and the like.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Non-finite weights, losses or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A parameter-server message that does not match the server's layouts.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A policy produced an action outside the action box.
class ActionBoundsError : public Error {
 public:
  using Error::Error;
};

// A required input file does not exist or cannot be parsed.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace adlab

#endif  // ADLAB_ERRORS_H_
