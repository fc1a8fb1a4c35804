#pragma once

#include <stdexcept>
#include <string>

namespace fusereg {

// Invalid inputs: bad dimensions, out-of-range parameters, malformed files.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures: unreadable input, unwritable output.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: divergence, non-finite intermediates.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fusereg
