#pragma once

#include <stdexcept>
#include <string>

namespace mess {

/// Raised when a computation leaves the representable range or a matrix
/// factorization cannot be completed; callers map this to exit code 2.
class numerical_error : public std::runtime_error {
  public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mess
