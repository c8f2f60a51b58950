#pragma once

#include <stdexcept>
#include <string>

namespace subshrink {

// Exit-code classes surfaced by the CLI: config 2, data 3, numerical 4.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a likelihood diverges because of (quasi-)separation.
class MonotoneLikelihoodError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace subshrink
