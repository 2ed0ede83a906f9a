#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hsdeg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or unreadable input data (files, JSON, CSV). The CLI exits with 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition or invariant was violated. The CLI exits with 3.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// Malformed HSC file; carries the byte offset where decoding failed.
class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class DimensionError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class ParameterError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class DomainError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class ShapeError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class SampleSizeError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

/// Training data that cannot support the requested model (e.g. one class).
class DegenerateError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

}  // namespace hsdeg
