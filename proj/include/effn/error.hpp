#pragma once

#include <stdexcept>
#include <string>

namespace effn {

// Error taxonomy used across the toolkit. The CLI maps any of these to
// exit code 1 with a one-line diagnostic.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct StateError : Error {
  using Error::Error;
};

}  // namespace effn
