#pragma once

#include <stdexcept>
#include <string>

namespace spoofkit {

// Bad input: malformed files, out-of-range arguments, shape mismatches.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric or runtime failure during an otherwise valid computation
// (NaN gradients, divergence, non-convergence). Exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spoofkit
