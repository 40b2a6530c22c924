#pragma once

#include <stdexcept>
#include <string>

namespace ptpm {

// Failure categories the command-line layer maps onto exit codes.
// Precondition violations inside the library throw std::invalid_argument.

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

}  // namespace ptpm
