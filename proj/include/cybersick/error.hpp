#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cybersick {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough samples or frames to satisfy an operation's precondition.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument is out of its valid domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (e.g. questionnaire item out of range).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `offset()` is the byte position of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace cybersick
