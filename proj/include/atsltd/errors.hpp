#pragma once

#include <stdexcept>
#include <string>

namespace atsltd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (bad field, bad line). Carries a 1-based line number
// when the source is line oriented, 0 otherwise.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line_no = 0)
      : Error(line_no ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
  std::size_t line;
};

struct BoundsError : Error {
  using Error::Error;
};

struct OrderingError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct CalibrationError : Error {
  using Error::Error;
};

struct EvalError : Error {
  using Error::Error;
};

}  // namespace atsltd
