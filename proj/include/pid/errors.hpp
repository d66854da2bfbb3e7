#pragma once

#include <stdexcept>
#include <string>

namespace pid {

// Bad user-supplied configuration (file contents, CLI values, guard violations).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Divergence or non-finite values produced while computing.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pid
