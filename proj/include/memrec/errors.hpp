#pragma once

#include <stdexcept>
#include <string>

namespace memrec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad hyperparameters, shapes or flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mixed ranges or otherwise ill-formed arguments to a pure operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed input files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace memrec
