#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irm {

/// Base class of every diagnostic raised by the toolchain.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input (assembly, ConSpec, assertion syntax, proof files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Input parsed but violates a structural invariant of the IR or a contract.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The interpreter reached a state the type-safe semantics does not cover.
class MachineFault : public Error {
 public:
  using Error::Error;
};

}  // namespace irm
