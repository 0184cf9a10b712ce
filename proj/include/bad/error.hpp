// Copyright 2026 The BAD Lab Authors.
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

namespace bad {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy shallow.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

class RuleViolation : public Error {
 public:
  explicit RuleViolation(const std::string& what)
      : Error("rule violation: " + what) {}
};

class TerminalStateError : public Error {
 public:
  explicit TerminalStateError(const std::string& what)
      : Error("terminal state: " + what) {}
};

class DegenerateBelief : public Error {
 public:
  explicit DegenerateBelief(const std::string& what)
      : Error("degenerate belief: " + what) {}
};

class InconsistentObservation : public Error {
 public:
  explicit InconsistentObservation(const std::string& what)
      : Error("inconsistent observation: " + what) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what)
      : Error("checkpoint: " + what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error("numerical: " + what) {}
};

}  // namespace bad
