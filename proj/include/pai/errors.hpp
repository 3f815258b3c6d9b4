#pragma once

#include <stdexcept>
#include <string>

namespace pai {

// Bad caller input (ranges, missing flags, unusable configs). CLI exit 2.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed or insufficient data (CSV parse failures, too few samples). CLI exit 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown (singular designs, degenerate predictors). CLI exit 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pai
