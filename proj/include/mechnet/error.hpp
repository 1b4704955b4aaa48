// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mechnet {

// Base class for all library errors. The C API maps each subclass onto a
// distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (edge lists, contact files, tables, manifests).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not agree; the message names the op.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Precondition violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace mechnet
