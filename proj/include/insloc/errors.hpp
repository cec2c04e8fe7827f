/* Copyright 2026 The InsLoc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef INSLOC_ERRORS_HPP_
#define INSLOC_ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace insloc {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or parameter shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input lies outside an operation's domain (zero-area box, zero-norm row, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or configuration value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. Carries the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        message_(what),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }
  // The message without the offset suffix.
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::uint64_t offset_;
};

// Unknown key or out-of-range value in a run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace insloc

#endif  // INSLOC_ERRORS_HPP_
