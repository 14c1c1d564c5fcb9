#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qnr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition or domain invariant (bad qubit count, unphysical
/// Bloch vector, dimension mismatch, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed textual input. `position()` is a 0-based character offset for
/// channel specs and a 1-based line number for files.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace qnr
