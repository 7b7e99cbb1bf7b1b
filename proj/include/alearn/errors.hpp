#pragma once

#include <stdexcept>
#include <string>

namespace alearn {

// Base class for every error thrown by this library. The CLI maps
// ConfigError to exit code 1 and any other Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched tensor or batch dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed input files; the message names the offending location.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A dataset-level contract was violated (unknown id, double labeling,
// reading a label that is still hidden behind the oracle).
class DataError : public Error {
 public:
  using Error::Error;
};

// An operation was called in a state that its contract forbids.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// The request is well-formed but outside what the implementation can
// provide (e.g. closed-form cost prediction under a patience schedule).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace alearn
