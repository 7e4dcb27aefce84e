// Copyright 2026 The RAGMan Authors
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

namespace ragman {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Structured input (JSON line, config document) is malformed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A persisted artifact failed integrity or version checks.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A lookup by key found nothing (unknown tutor, unknown session).
class NotFound : public Error {
 public:
  using Error::Error;
};

/// A remote provider (embedding or chat) failed after retries.
class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what, bool auth_failure = false)
      : Error(what), auth_failure_(auth_failure) {}

  bool auth_failure() const noexcept { return auth_failure_; }

 private:
  bool auth_failure_;
};

}  // namespace ragman
