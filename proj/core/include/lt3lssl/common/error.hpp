#pragma once

#include <stdexcept>
#include <string>

namespace lt3lssl {

// Precondition violated by the caller (bad shape, out-of-range class, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data does not satisfy what an operation needs (e.g. too few samples).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value produced during loss evaluation or training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File-system failure; messages always carry the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lt3lssl
