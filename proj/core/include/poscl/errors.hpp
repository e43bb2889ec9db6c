// Copyright 2026 The poscl Authors.
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

namespace poscl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside an operation's mathematical domain (log of <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An index or count is out of range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is invalid. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient. The CLI maps this to exit code 3.
class NumericAbort : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace poscl
