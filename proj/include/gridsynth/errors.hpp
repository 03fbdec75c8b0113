#pragma once

#include <stdexcept>
#include <string>

namespace gridsynth {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input document. `byte_offset` < 0 when unknown.
struct ParseError : Error {
  ParseError(const std::string& msg, long long offset = -1)
      : Error(msg), byte_offset(offset) {}
  long long byte_offset;
};

struct EmptyInputError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct AttachError : Error {
  using Error::Error;
};

struct NoPathError : Error {
  using Error::Error;
};

struct EstimationError : Error {
  using Error::Error;
};

struct SolveError : Error {
  using Error::Error;
};

struct TimeoutError : Error {
  using Error::Error;
};

}  // namespace gridsynth
