#pragma once

#include <stdexcept>
#include <string>

namespace mvak {

// Error categories map one-to-one onto the CLI exit codes (1, 2, 3).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mvak
