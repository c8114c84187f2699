// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_ERROR_HPP_
#define ARNSE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace arnse {

// Bad input data: malformed files, shape/length mismatches, degenerate signals.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values reached a computation that requires finite ones.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments supplied by the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace arnse

#endif  // ARNSE_ERROR_HPP_
